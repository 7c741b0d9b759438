"""Monte Carlo engine for the graphical construction.

Rings arrive as a Poisson process of rate ``sum_e r_e``; each ring picks an
edge with probability proportional to its rate and a permutation from that
edge's law.  All processes are driven by the same flow maps, so a single
event log realizes RW(1) for every start vertex and IP(k) for every start
configuration.

Randomness is keyed by ``(seed, stream, replica)`` through counter-based
Philox generators, so replica ``i`` is the same whatever the worker count.
"""

from __future__ import annotations

import bisect
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .model import Config, HypergraphInstance, ProcessSpec, StateSpaceTooLarge, enumerate_states


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def generator(self, replica: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, replica))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class EventLog:
    horizon: float
    times: tuple[float, ...]
    edges: tuple[int, ...]
    perms: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.times)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"t": t, "edge": e, "perm": list(p)}) + "\n"
            for t, e, p in zip(self.times, self.edges, self.perms)
        )

    @classmethod
    def from_jsonl(cls, text: str, horizon: float) -> EventLog:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(
            float(horizon),
            tuple(float(r["t"]) for r in rows),
            tuple(int(r["edge"]) for r in rows),
            tuple(tuple(r["perm"]) for r in rows),
        )


class _EdgeTable:
    """Per-edge sampling tables, built once per instance."""

    def __init__(self, instance: HypergraphInstance):
        self.instance = instance
        rates = np.array([e.rate for e in instance.edges])
        self.total = float(rates.sum())
        self.probs = rates / self.total
        self.vertices = [e.vertices for e in instance.edges]
        self.kinds = [e.law.kind for e in instance.edges]
        self.explicit = []
        for e in instance.edges:
            if e.law.kind == "explicit":
                perms = [p for p, _ in e.law.entries]
                ps = np.array([p for _, p in e.law.entries])
                self.explicit.append((perms, ps / ps.sum()))
            else:
                self.explicit.append(None)

    def sample_perm(self, idx: int, rng: np.random.Generator) -> tuple[int, ...]:
        kind = self.kinds[idx]
        verts = self.vertices[idx]
        if kind == "transposition":
            return (verts[1], verts[0])
        if kind == "uniform":
            return tuple(verts[i] for i in rng.permutation(len(verts)))
        perms, ps = self.explicit[idx]
        return perms[int(rng.choice(len(perms), p=ps))]

    def sample(self, T: float, rng: np.random.Generator) -> EventLog:
        if T <= 0:
            return EventLog(max(T, 0.0), (), (), ())
        count = int(rng.poisson(self.total * T))
        times = np.sort(rng.uniform(0.0, T, size=count))
        edges = rng.choice(len(self.probs), size=count, p=self.probs)
        perms = tuple(self.sample_perm(int(e), rng) for e in edges)
        return EventLog(float(T), tuple(times.tolist()), tuple(int(e) for e in edges), perms)


_TABLES: dict[int, _EdgeTable] = {}


def _table(instance: HypergraphInstance) -> _EdgeTable:
    key = id(instance)
    tab = _TABLES.get(key)
    if tab is None or tab.instance is not instance:
        tab = _TABLES[key] = _EdgeTable(instance)
    return tab


def sample_event_log(instance: HypergraphInstance, T: float, rng: RngSpec, replica: int = 0) -> EventLog:
    return _table(instance).sample(T, rng.generator(replica))


def _apply_ring(config: Config, verts: Sequence[int], perm: Sequence[int]) -> Config:
    mapping = dict(zip(verts, perm))
    return tuple(mapping.get(x, x) for x in config)


def evolve(config: Sequence[int], log: EventLog, instance: HypergraphInstance, s: float = 0.0, t: float | None = None) -> Config:
    """Apply the rings with time in ``(s, t]`` to ``config``."""
    t = log.horizon if t is None else t
    if not 0 <= s <= t <= log.horizon:
        raise ValueError(f"window [{s}, {t}] outside [0, {log.horizon}]")
    lo = bisect.bisect_right(log.times, s)
    hi = bisect.bisect_right(log.times, t)
    state = tuple(config)
    for idx in range(lo, hi):
        state = _apply_ring(state, instance.edges[log.edges[idx]].vertices, log.perms[idx])
    return state


@dataclass(frozen=True)
class Trajectory:
    start: Config
    jump_times: tuple[float, ...]
    states: tuple[Config, ...]
    horizon: float

    def at(self, t: float) -> Config:
        i = bisect.bisect_right(self.jump_times, t)
        return self.start if i == 0 else self.states[i - 1]


def trajectory(config: Sequence[int], log: EventLog, instance: HypergraphInstance) -> Trajectory:
    state = tuple(config)
    jumps: list[float] = []
    states: list[Config] = []
    for t, e, p in zip(log.times, log.edges, log.perms):
        nxt = _apply_ring(state, instance.edges[e].vertices, p)
        if nxt != state:
            jumps.append(t)
            states.append(nxt)
        state = nxt
    return Trajectory(tuple(config), tuple(jumps), tuple(states), log.horizon)


def count_interactions(
    config: Sequence[int],
    pair: tuple[int, int],
    log: EventLog,
    instance: HypergraphInstance,
    window: tuple[float, float],
) -> int:
    """Rings in ``window`` whose edge holds both particles' pre-ring positions."""
    t1, t2 = window
    i, j = pair
    state = tuple(config)
    count = 0
    for t, e, p in zip(log.times, log.edges, log.perms):
        if t > t2:
            break
        verts = instance.edges[e].vertices
        if t > t1 and state[i] in verts and state[j] in verts:
            count += 1
        state = _apply_ring(state, verts, p)
    return count


def _avoids(config: Config, log: EventLog, instance: HypergraphInstance, s: float) -> bool:
    """True when the last particle meets no other particle during (s, 2s]."""
    state = config
    for t, e, p in zip(log.times, log.edges, log.perms):
        verts = instance.edges[e].vertices
        if t > s and state[-1] in verts and any(x in verts for x in state[:-1]):
            return False
        state = _apply_ring(state, verts, p)
    return True


# ---------------------------------------------------------------------------
# replica machinery
# ---------------------------------------------------------------------------


def run_replicas(fn: Callable[[int], object], replicas: int, workers: int = 1) -> list:
    """Evaluate ``fn(replica)`` for every replica, in replica order."""
    if workers <= 1 or replicas < 64:
        return [fn(r) for r in range(replicas)]
    chunk = max(1, replicas // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(replicas), chunksize=chunk))


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    replicas: int

    def agrees(self, exact: float, n_se: float = 3.0) -> bool:
        return abs(self.value - exact) <= n_se * self.se + 1e-12


def _bernoulli(hits: Sequence[bool]) -> Estimate:
    n = len(hits)
    p = float(np.mean(hits))
    return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n)


def _probj_replica(instance, start, s, rng: RngSpec, replica: int) -> bool:
    log = _table(instance).sample(2 * s, rng.generator(replica))
    return _avoids(tuple(start), log, instance, s)


def estimate_probJ(
    instance: HypergraphInstance,
    start: Sequence[int],
    s: float,
    replicas: int,
    rng: RngSpec,
    workers: int = 1,
) -> Estimate:
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if len(start) == 1:
        return Estimate(1.0, 0.0, replicas)
    hits = run_replicas(partial(_probj_replica, instance, tuple(start), s, rng), replicas, workers)
    return _bernoulli(hits)


def _hk_replica(instance, x, t, rng: RngSpec, replica: int) -> bool:
    log = _table(instance).sample(t, rng.generator(replica))
    return evolve((x,), log, instance)[0] == x


def estimate_heat_kernel(
    instance: HypergraphInstance, x: int, t: float, replicas: int, rng: RngSpec, workers: int = 1
) -> Estimate:
    """Fraction of replicas with the walk from ``x`` back at ``x`` at time ``t``."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if t == 0:
        return Estimate(1.0, 0.0, replicas)
    hits = run_replicas(partial(_hk_replica, instance, x, t, rng), replicas, workers)
    return _bernoulli(hits)


def _interaction_replica(instance, start, pair, window, rng: RngSpec, replica: int) -> int:
    log = _table(instance).sample(window[1], rng.generator(replica))
    return count_interactions(start, pair, log, instance, window)


def estimate_interactions(
    instance: HypergraphInstance,
    start: Sequence[int],
    pair: tuple[int, int],
    window: tuple[float, float],
    replicas: int,
    rng: RngSpec,
    workers: int = 1,
) -> Estimate:
    counts = np.array(
        run_replicas(partial(_interaction_replica, instance, tuple(start), pair, window, rng), replicas, workers),
        dtype=float,
    )
    return Estimate(float(counts.mean()), float(counts.std(ddof=1) / math.sqrt(len(counts))), len(counts))


def _endpoint_replica(instance, kind, starts, t, rng: RngSpec, replica: int):
    """Time-t states from each start, driven by a shared log (RW: one log per walker)."""
    gen = rng.generator(replica)
    tab = _table(instance)
    if kind == "RW":
        k = len(starts[0])
        logs = [tab.sample(t, gen) for _ in range(k)]
        return tuple(
            tuple(evolve((x,), logs[i], instance)[0] for i, x in enumerate(start)) for start in starts
        )
    log = tab.sample(t, gen)
    out = tuple(evolve(start, log, instance) for start in starts)
    if kind == "EX":
        out = tuple(tuple(sorted(s)) for s in out)
    return out


@dataclass(frozen=True)
class TVEstimate:
    value: float
    ci_low: float
    ci_high: float
    se: float
    bias_scale: float
    replicas: int

    def agrees(self, exact: float, n_se: float = 3.0) -> bool:
        return abs(self.value - exact) <= n_se * self.se + 1e-12 or self.ci_low <= exact <= self.ci_high


def _plugin_tv(a: np.ndarray, b: np.ndarray, n_labels: int) -> float:
    pa = np.bincount(a, minlength=n_labels) / len(a)
    pb = np.bincount(b, minlength=n_labels) / len(b)
    return 0.5 * float(np.abs(pa - pb).sum())


def empirical_tv(
    spec: ProcessSpec,
    start_a: Sequence[int],
    start_b: Sequence[int],
    t: float,
    replicas: int,
    rng: RngSpec,
    coarsen: Callable[[Config], object] | None = None,
    n_boot: int = 200,
    workers: int = 1,
) -> TVEstimate:
    """Plug-in TV between the empirical time-t laws from two starts.

    The estimator is biased upward by roughly ``sqrt(states / replicas)``;
    that scale is reported as ``bias_scale``.  The CI is a paired bootstrap.
    """
    if spec.kind not in ("IP", "EX", "RW"):
        raise ValueError("empirical_tv supports IP, EX and RW")
    if coarsen is None:
        try:
            n_labels = len(enumerate_states(spec))
        except StateSpaceTooLarge as exc:
            raise ValueError("state space not enumerable; supply a coarsening map") from exc
    else:
        n_labels = None
    starts = (tuple(start_a), tuple(start_b))
    pairs = run_replicas(partial(_endpoint_replica, spec.instance, spec.kind, starts, t, rng), replicas, workers)
    keys: dict[object, int] = {}

    def label(state):
        key = coarsen(state) if coarsen else state
        return keys.setdefault(key, len(keys))

    a = np.array([label(p[0]) for p in pairs])
    b = np.array([label(p[1]) for p in pairs])
    m = len(keys)
    value = _plugin_tv(a, b, m)
    boot_rng = RngSpec(rng.seed, rng.stream).generator(2**62)
    boots = np.empty(n_boot)
    for i in range(n_boot):
        idx = boot_rng.integers(0, replicas, size=replicas)
        boots[i] = _plugin_tv(a[idx], b[idx], m)
    lo, hi = np.quantile(boots, [0.025, 0.975])
    states = n_labels if n_labels is not None else m
    return TVEstimate(value, float(lo), float(hi), float(boots.std(ddof=1)), math.sqrt(states / replicas), replicas)
