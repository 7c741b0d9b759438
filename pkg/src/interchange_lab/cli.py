"""Command-line front end: ``gen``, ``analyze``, ``simulate``, ``verify``, ``report``.

Every run writes its artifacts plus ``manifest.json`` (config, config hash,
seed, library versions, output digests) into ``--out``.  Outputs carry no
timestamps, so a rerun with the same config and seed is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import dirichlet, theorems
from .exact import (
    build_generator,
    exact_expected_interactions,
    exact_probJ,
    export_generator,
    mixing_time,
    relaxation_time,
    transition_matrix,
    tv,
    tv_curve,
)
from .instances import generate_instance, parse_generator
from .model import (
    DEFAULT_BUDGET,
    HypergraphInstance,
    ProcessSpec,
    StateSpaceTooLarge,
    validate_instance,
)
from .report import VerificationReport, any_failed, reports_to_json, summary_table
from .sim import (
    RngSpec,
    empirical_tv,
    estimate_heat_kernel,
    estimate_interactions,
    estimate_probJ,
    sample_event_log,
)

SEED_ENV = "INTERCHANGE_LAB_SEED"
COMMANDS = ("gen", "analyze", "simulate", "verify", "report")
CHECKS = (
    "clr",
    "dirichlet",
    "trel",
    "caputo",
    "probj",
    "submulti",
    "main",
    "sandwich",
    "mixtrel",
    "hk",
    "negcorr",
    "en",
)
ESTIMATES = ("probj", "heat-kernel", "interactions", "tv")

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_ERROR = 2


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    generator: str | None = None
    instance_path: str | None = None
    process: str = "ip"
    k: list[int] = field(default_factory=list)
    eps: list[float] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    checks: list[str] = field(default_factory=list)
    estimate: str | None = None
    start: list[int] = field(default_factory=list)
    start_b: list[int] = field(default_factory=list)
    pair: list[int] = field(default_factory=lambda: [0, 1])
    replicas: int = 10_000
    trials: int = 500
    theta: float = 0.1
    hk_c: float = 1.0
    alpha: float = 1.0
    curve: str = "tv"
    export: bool = False
    seed: int | None = None
    tol: float = 1e-10
    budget_states: int = DEFAULT_BUDGET
    threads: int = 1
    out: str = "out"
    inputs: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command != "report" and not (self.generator or self.instance_path):
            raise ConfigError("give --generator or --instance")
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; choose from {', '.join(CHECKS)}")
        if self.command == "simulate":
            if self.estimate not in ESTIMATES:
                raise ConfigError(f"--estimate must be one of {', '.join(ESTIMATES)}")
            if self.seed is None:
                raise ConfigError(f"simulation needs --seed or ${SEED_ENV}")
        if any(e <= 0 or e >= 1 for e in self.eps):
            raise ConfigError("eps values must lie in (0, 1)")
        if any(t < 0 for t in self.times):
            raise ConfigError("times must be nonnegative")
        if self.replicas < 1 or self.trials < 1:
            raise ConfigError("replicas and trials must be positive")

    def canonical(self) -> str:
        # output location is not part of the experiment's identity
        body = {k: v for k, v in asdict(self).items() if k != "out"}
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def parse_process(text: str, ks: list[int]) -> tuple[str, int]:
    """``ip2`` / ``ip`` + ``--k`` / ``q2`` -> (kind, k)."""
    t = text.strip().lower()
    if t == "q2":
        return "Q2", 2
    kind = t.rstrip("0123456789")
    digits = t[len(kind):]
    if kind.upper() not in ("RW", "IP", "EX"):
        raise ConfigError(f"unknown process {text!r}")
    k = int(digits) if digits else (ks[0] if ks else 2)
    return kind.upper(), k


def load_instance(cfg: ExperimentConfig) -> HypergraphInstance:
    if cfg.instance_path:
        return HypergraphInstance.from_json(Path(cfg.instance_path).read_text())
    name, params = parse_generator(cfg.generator)
    return generate_instance(name, params)


# ---------------------------------------------------------------------------
# artifact writing
# ---------------------------------------------------------------------------


class Artifacts:
    def __init__(self, out: str):
        self.root = Path(out)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def text(self, name: str, body: str) -> None:
        self.path(name).write_text(body)

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def manifest(self, cfg: ExperimentConfig, status: int) -> None:
        digests = {}
        for name in sorted(set(self.files)):
            digests[name] = hashlib.sha256((self.root / name).read_bytes()).hexdigest()
        obj = {
            "config": asdict(cfg),
            "config_sha256": cfg.digest(),
            "seed": cfg.seed,
            "exit_status": status,
            "versions": _versions(),
            "outputs": digests,
        }
        (self.root / "manifest.json").write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "networkx"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _num(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(cfg: ExperimentConfig, art: Artifacts) -> int:
    inst = load_instance(cfg)
    art.text("instance.json", inst.to_json() + "\n")
    rep = validate_instance(inst)
    art.json("validation.json", {"ok": rep.ok, "violations": rep.violations})
    print(inst.to_json())
    return EXIT_OK


def _default_times(gen) -> list[float]:
    hi = 3.0 * mixing_time(gen, 0.01, rtol=1e-4)
    return [float(t) for t in np.linspace(0.0, hi, 61)]


def cmd_analyze(cfg: ExperimentConfig, art: Artifacts) -> int:
    inst = load_instance(cfg)
    kind, k = parse_process(cfg.process, cfg.k)
    spec = ProcessSpec(kind, k, inst)
    gen = build_generator(spec, budget=cfg.budget_states)
    summary = {
        "process": spec.label,
        "n": inst.n,
        "states": gen.n_states,
        "irreducible": gen.irreducible(),
        "reversible": gen.reversible,
        "mixing_times": {},
    }
    if gen.irreducible() and gen.pi is not None:
        for eps in cfg.eps or [0.25]:
            summary["mixing_times"][repr(eps)] = mixing_time(gen, eps)
        if gen.reversible:
            summary["t_rel"] = relaxation_time(gen)
            summary["spectral_gap"] = 1.0 / summary["t_rel"]
        if cfg.curve == "tv":
            times = cfg.times or _default_times(gen)
            curve = tv_curve(gen, times, with_bar_d=kind == "IP", tol=cfg.tol)
            art.csv("tv_curve.csv", ["t", "value", "se"], [(_num(t), _num(d), "") for t, d in zip(curve.times, curve.d)])
            if curve.bar_d is not None:
                art.csv("bar_d_curve.csv", ["t", "value", "se"], [(_num(t), _num(d), "") for t, d in zip(curve.times, curve.bar_d)])
            summary["curve_monotone"] = curve.is_monotone()
    if cfg.export:
        coo, legend = export_generator(gen, art.root / "generator")
        art.files += [Path(coo).name, Path(legend).name]
    art.json("analysis.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, art: Artifacts) -> int:
    inst = load_instance(cfg)
    rng = RngSpec(cfg.seed)
    kind, k = parse_process(cfg.process, cfg.k)
    t = cfg.times[0] if cfg.times else 1.0
    result: dict = {"estimate": cfg.estimate, "replicas": cfg.replicas, "seed": cfg.seed}
    exact = None
    if cfg.estimate == "probj":
        start = tuple(cfg.start or range(k))
        est = estimate_probJ(inst, start, t, cfg.replicas, rng, cfg.threads)
        result.update(start=list(start), s=t)
        exact = _try(lambda: exact_probJ(ProcessSpec("IP", len(start), inst), start, t))
    elif cfg.estimate == "heat-kernel":
        x = cfg.start[0] if cfg.start else 0
        est = estimate_heat_kernel(inst, x, t, cfg.replicas, rng, cfg.threads)
        result.update(x=x, t=t)
        exact = _try(lambda: float(transition_matrix(build_generator(ProcessSpec("RW", 1, inst)), t)[x, x]))
    elif cfg.estimate == "interactions":
        start = tuple(cfg.start or range(max(k, 2)))
        window = (cfg.times[0], cfg.times[1]) if len(cfg.times) >= 2 else (0.0, 1.0)
        pair = tuple(cfg.pair)
        est = estimate_interactions(inst, start, pair, window, cfg.replicas, rng, cfg.threads)
        result.update(start=list(start), pair=list(pair), window=list(window))
        exact = _try(lambda: exact_expected_interactions(ProcessSpec("IP", len(start), inst), pair, start, window))
    else:
        spec = ProcessSpec(kind, k, inst)
        a = tuple(cfg.start or range(k))
        b = tuple(cfg.start_b or reversed(a))
        est = empirical_tv(spec, a, b, t, cfg.replicas, rng, workers=cfg.threads)
        result.update(start_a=list(a), start_b=list(b), t=t, ci=[est.ci_low, est.ci_high], bias_scale=est.bias_scale)
        exact = _try(lambda: _exact_tv(spec, a, b, t))
    result.update(value=est.value, se=est.se, exact=exact)
    if exact is not None:
        result["agrees_3se"] = bool(est.agrees(exact))
    log = sample_event_log(inst, t if cfg.estimate != "interactions" else result["window"][1], rng, replica=0)
    art.text("event_log_replica0.jsonl", log.to_jsonl())
    art.json("estimate.json", result)
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def _exact_tv(spec: ProcessSpec, a, b, t: float) -> float:
    gen = build_generator(spec)
    P = transition_matrix(gen, t)
    return tv(P[gen.index(a)], P[gen.index(b)])


def _try(fn):
    try:
        return fn()
    except (StateSpaceTooLarge, MemoryError):
        return None


def run_checks(cfg: ExperimentConfig, inst: HypergraphInstance) -> list[VerificationReport]:
    ks = cfg.k or [3]
    reports: list[VerificationReport] = []
    checks = cfg.checks or ["mixtrel"]
    for check in checks:
        if check == "clr":
            reports += theorems.verify_clr(inst, cfg.k or None)
        elif check == "dirichlet":
            reports += dirichlet.comparison_report(inst, cfg.trials, cfg.seed if cfg.seed is not None else 0)
        elif check == "trel":
            reports += dirichlet.trel_comparison(inst)
        elif check == "caputo":
            reports += theorems.verify_caputo_chain(inst, ks)
        elif check == "hk":
            tr = theorems.trel("RW", 1, inst)
            times = cfg.times or [float(x) for x in np.geomspace(tr, 50 * tr, 8)]
            reports += theorems.check_hk_theta(inst, cfg.theta, cfg.hk_c, times)
        elif check == "negcorr":
            for t in cfg.times or [0.5, 1.0, 2.0]:
                reports.append(theorems.verify_negative_correlation(inst, t, exploratory=not inst.is_graph()))
        elif check == "en":
            for eps in cfg.eps or [0.25]:
                reports += theorems.verify_interaction_bound_EN(inst, eps, cfg.alpha)
        elif check == "mixtrel":
            reports += theorems.verify_mixtrel(inst, cfg.eps or (0.25, 0.1, 0.01))
        else:
            for k in ks:
                eps_values = cfg.eps or theorems.default_eps_grid(k)
                if check == "submulti":
                    grid = cfg.times or None
                    reports += theorems.submultiplicativity_grid(inst, k, grid, grid)
                    continue
                for eps in eps_values:
                    if check == "probj":
                        reports.append(
                            theorems.verify_lemma_probJ(
                                inst, eps, k, rng=RngSpec(cfg.seed if cfg.seed is not None else 0), replicas=cfg.replicas, workers=cfg.threads
                            )
                        )
                    elif check == "main":
                        reports += theorems.verify_theorem_main(inst, min(eps, 0.25, 1.0 / k), k)
                    elif check == "sandwich":
                        if eps < 0.25:
                            reports += theorems.verify_rw_sandwich(inst, k, eps)
    return reports


def cmd_verify(cfg: ExperimentConfig, art: Artifacts) -> int:
    inst = load_instance(cfg)
    reports = run_checks(cfg, inst)
    art.text("reports.json", reports_to_json(reports) + "\n")
    table = summary_table(reports)
    art.text("summary.txt", table + "\n")
    print(table)
    return EXIT_FAILED_CHECK if any_failed(reports) else EXIT_OK


def cmd_report(cfg: ExperimentConfig, art: Artifacts) -> int:
    rows = []
    for path in cfg.inputs:
        items = json.loads(Path(path).read_text())
        if not isinstance(items, list) or not all(isinstance(i, dict) and "status" in i for i in items):
            raise ConfigError(f"{path} is not a reports.json file")
        for item in items:
            item["source"] = str(path)
            rows.append(item)
    counts: dict[str, int] = {}
    for r in rows:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    art.json("aggregate.json", {"counts": dict(sorted(counts.items())), "reports": rows})
    lines = [f"{k}: {v}" for k, v in sorted(counts.items())]
    failed = [r for r in rows if r["status"] == "fail"]
    lines += [f"FAIL {r['name']} ({r['source']})" for r in failed]
    art.text("aggregate.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_FAILED_CHECK if failed else EXIT_OK


DISPATCH = {"gen": cmd_gen, "analyze": cmd_analyze, "simulate": cmd_simulate, "verify": cmd_verify, "report": cmd_report}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured command; returns the exit status."""
    cfg.validate()
    art = Artifacts(cfg.out)
    status = DISPATCH[cfg.command](cfg, art)
    art.manifest(cfg, status)
    return status


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    out = []
    for x in filter(None, (s.strip() for s in text.split(","))):
        if "/" in x:
            num, den = x.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(x))
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("instance")
    src.add_argument("--instance", dest="instance_path", help="hypergraph JSON file")
    src.add_argument("--generator", help='named generator, e.g. "cycle:n=5" or "torus:d=2,m=4"')
    common.add_argument("--process", default="ip", help="rw|ip|ex with --k, or ip2, rw1, q2, ...")
    common.add_argument("--k", type=_ints, default=[], help="particle count(s), comma separated")
    common.add_argument("--eps", type=_floats, default=[], help="eps grid, e.g. 1/4,1/8")
    common.add_argument("--times", type=_floats, default=[], help="time grid or window")
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (falls back to ${SEED_ENV})")
    common.add_argument("--tol", type=float, default=1e-10, help="kernel truncation tolerance")
    common.add_argument("--budget-states", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--threads", type=int, default=1, help="worker cap for Monte Carlo")
    common.add_argument("--out", default="out", help="output directory")

    p = argparse.ArgumentParser(prog="interchange-lab", description="Interchange/exclusion process laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="build an instance and write it as JSON")
    a = sub.add_parser("analyze", parents=[common], help="exact curves, gaps and mixing times")
    a.add_argument("--curve", choices=("tv", "none"), default="tv")
    a.add_argument("--export-generator", dest="export", action="store_true")
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    s.add_argument("--estimate", choices=ESTIMATES, required=True)
    s.add_argument("--start", type=_ints, default=[])
    s.add_argument("--start-b", type=_ints, default=[])
    s.add_argument("--pair", type=_ints, default=[0, 1])
    s.add_argument("--replicas", type=int, default=10_000)
    v = sub.add_parser("verify", parents=[common], help="run the inequality harness")
    v.add_argument("--check", dest="checks", type=lambda x: [c.strip() for c in x.split(",") if c.strip()], default=[])
    v.add_argument("--trials", type=int, default=500)
    v.add_argument("--replicas", type=int, default=10_000)
    v.add_argument("--theta", type=float, default=0.1)
    v.add_argument("--hk-c", type=float, default=1.0)
    v.add_argument("--alpha", type=float, default=1.0)
    r = sub.add_parser("report", help="aggregate reports.json files")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--out", default="out")
    return p


def config_from_args(argv: list[str] | None = None) -> ExperimentConfig:
    ns = vars(build_parser().parse_args(argv))
    if ns.get("seed") is None and os.environ.get(SEED_ENV):
        ns["seed"] = int(os.environ[SEED_ENV])
    fields = ExperimentConfig.__dataclass_fields__
    return ExperimentConfig(**{k: v for k, v in ns.items() if k in fields})


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except (ConfigError, StateSpaceTooLarge, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
