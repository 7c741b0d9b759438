import time
from collections import defaultdict

import pytest

CRITERIA = {
    1: "CLR regression: t_rel IP(k) = t_rel RW(1), connected graphs n <= 6 (1e-8 rel)",
    2: "Dirichlet comparison constants 8/36/44/16/120 on uniform instances (+1e-9)",
    3: "t_rel chain Q(2) <= RW(2), IP(2) <= 120 RW(1) (1e-9)",
    4: "P[J_s] lower bound, k in {3,4}; K_5/K_6 closed form (1e-8)",
    5: "bar d_k two-sided submultiplicativity, C_5 and K_4, k=3, 3x3 grid (1e-9)",
    6: "main bound on K_5 and C_6, k=3, gated on delta < 1 (1e-9)",
    7: "RW(k) sandwich, C_5 and K_4, k=3, eps in {1/5, 1/8} (1e-9)",
    8: "t_mix / t_rel envelopes for RW(1) and IP(2), eps in {1/4, 1/10, 1/100}",
    9: "negative correlation on C_5, C_6, K_4, t in {0.5, 1, 2} (1e-10)",
    10: "heat-kernel identity (1e-10) and E[N] bound on C_6, C_8, K_4",
    11: "3-cycle law: IP(2) irreducible, IP(4) reducible with 12-state class",
    12: "Monte Carlo agrees with exact within 3 SE; seeds reproduce bytes",
}

_outcomes: dict[int, list[tuple[str, str, float]]] = defaultdict(list)
_notes: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def note(request):
    """Attach a short remark to the criterion of the current test."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str) -> None:
        if marker is not None:
            _notes[marker.args[0]].append(text)

    return add


@pytest.fixture
def budget():
    """Assert a wall-clock budget in seconds: ``with budget(60): ...``."""

    class _Budget:
        def __init__(self, seconds):
            self.seconds = seconds

        def __enter__(self):
            self.t0 = time.perf_counter()

        def __exit__(self, *exc):
            if exc[0] is None:
                took = time.perf_counter() - self.t0
                assert took < self.seconds, f"runtime {took:.1f}s exceeds {self.seconds}s"

    return _Budget


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes[marker.args[0]].append((item.name, rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num, desc in CRITERIA.items():
        runs = _outcomes.get(num)
        if not runs:
            tr.write_line(f"[ -- ] {num:2d}. {desc} (not run)")
            continue
        ok = all(o == "passed" for _, o, _ in runs)
        secs = sum(d for _, _, d in runs)
        tag = "PASS" if ok else "FAIL"
        tr.write_line(f"[{tag}] {num:2d}. {desc} [{len(runs)} tests, {secs:.1f}s]")
        for text in _notes.get(num, []):
            tr.write_line(f"         {text}")
