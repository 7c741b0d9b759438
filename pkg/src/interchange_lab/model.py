"""Hypergraph instances, permutation laws, process specifications and state spaces."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Config = tuple[int, ...]
Perm = tuple[int, ...]

PROCESS_KINDS = ("RW", "IP", "EX", "Q2")
DEFAULT_BUDGET = 5_000_000
NORMALIZATION_TOL = 1e-12
STATIONARITY_TOL = 1e-10


class StateSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class PermutationLaw:
    """Law of the permutation applied when an edge rings.

    ``kind`` is one of ``"uniform"``, ``"transposition"`` or ``"explicit"``.
    Explicit entries are ``(perm, p)`` pairs where ``perm`` lists the images of
    the edge's sorted vertex list.
    """

    kind: str
    entries: tuple[tuple[Perm, float], ...] = ()

    @classmethod
    def uniform(cls) -> PermutationLaw:
        return cls("uniform")

    @classmethod
    def transposition(cls) -> PermutationLaw:
        return cls("transposition")

    @classmethod
    def explicit(cls, entries: Iterable[tuple[Sequence[int], float]]) -> PermutationLaw:
        return cls("explicit", tuple((tuple(int(v) for v in perm), float(p)) for perm, p in entries))

    def support(self, vertices: Sequence[int]) -> list[tuple[Perm, float]]:
        if self.kind == "uniform":
            perms = list(itertools.permutations(vertices))
            p = 1.0 / len(perms)
            return [(perm, p) for perm in perms]
        if self.kind == "transposition":
            if len(vertices) != 2:
                raise ValueError("transposition law requires |e| = 2")
            return [((vertices[1], vertices[0]), 1.0)]
        if self.kind == "explicit":
            return list(self.entries)
        raise ValueError(f"unknown law kind {self.kind!r}")

    def to_json_obj(self):
        if self.kind in ("uniform", "transposition"):
            return self.kind
        return {"explicit": [{"perm": list(perm), "p": p} for perm, p in self.entries]}

    @classmethod
    def from_json_obj(cls, obj) -> PermutationLaw:
        if obj in ("uniform", "transposition"):
            return cls(obj)
        if isinstance(obj, dict) and "explicit" in obj:
            return cls.explicit((item["perm"], item["p"]) for item in obj["explicit"])
        raise ValueError(f"unrecognized law {obj!r}")


@dataclass(frozen=True)
class Hyperedge:
    vertices: tuple[int, ...]
    rate: float = 1.0
    law: PermutationLaw = field(default_factory=PermutationLaw.uniform)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(int(v) for v in self.vertices)))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def size(self) -> int:
        return len(self.vertices)

    def support(self) -> list[tuple[Perm, float]]:
        return self.law.support(self.vertices)


@dataclass(frozen=True)
class HypergraphInstance:
    n: int
    edges: tuple[Hyperedge, ...]
    # Test-only override of the n >= 3 standing assumption.
    allow_small: bool = False

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def total_rate(self) -> float:
        return sum(e.rate for e in self.edges)

    def is_graph(self) -> bool:
        return all(e.size == 2 for e in self.edges)

    def laws_uniform(self) -> bool:
        return all(e.law.kind == "uniform" for e in self.edges)

    def single_particle_rates(self) -> np.ndarray:
        """Dense n x n matrix of RW(1) jump rates (diagonal zero)."""
        rates = np.zeros((self.n, self.n))
        for e in self.edges:
            for perm, p in e.support():
                for u, v in zip(e.vertices, perm):
                    if u != v:
                        rates[u, v] += e.rate * p
        return rates

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for e in self.edges:
            for v in e.vertices:
                deg[v] += 1
        return deg

    def to_json(self) -> str:
        obj = {
            "n": self.n,
            "edges": [
                {"vertices": list(e.vertices), "rate": e.rate, "law": e.law.to_json_obj()}
                for e in self.edges
            ],
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str, allow_small: bool = False) -> HypergraphInstance:
        obj = json.loads(text)
        edges = tuple(
            Hyperedge(tuple(item["vertices"]), item["rate"], PermutationLaw.from_json_obj(item["law"]))
            for item in obj["edges"]
        )
        return cls(int(obj["n"]), edges, allow_small=allow_small)


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    k: int
    instance: HypergraphInstance

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in PROCESS_KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        if kind == "Q2" and self.k != 2:
            raise ValueError("Q2 is a two-particle process")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if kind in ("IP", "EX", "Q2") and self.k > self.instance.n:
            raise ValueError("IP/EX require k <= n")

    @property
    def label(self) -> str:
        return "Q(2)" if self.kind == "Q2" else f"{self.kind}({self.k})"


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_instance(instance: HypergraphInstance, require_connected: bool = True) -> ValidationReport:
    """List every violated invariant of ``instance`` (empty list means valid)."""
    out: list[str] = []
    n = instance.n
    if n < 1:
        out.append("n must be positive")
    elif n < 3 and not instance.allow_small:
        out.append("n < 3 (standing assumption n >= 3)")
    if not instance.edges:
        out.append("no edges")
    for idx, e in enumerate(instance.edges):
        tag = f"edge {idx}"
        if len(set(e.vertices)) != len(e.vertices):
            out.append(f"{tag}: repeated vertex")
        if not 2 <= len(e.vertices) <= max(n, 2):
            out.append(f"{tag}: size {len(e.vertices)} outside [2, n]")
        if any(v < 0 or v >= n for v in e.vertices):
            out.append(f"{tag}: vertex out of range")
        if not e.rate > 0 or not math.isfinite(e.rate):
            out.append(f"{tag}: nonpositive rate")
        law = e.law
        if law.kind == "transposition" and len(e.vertices) != 2:
            out.append(f"{tag}: transposition law needs |e| = 2")
        elif law.kind == "explicit":
            if not law.entries:
                out.append(f"{tag}: empty explicit law")
            probs = [p for _, p in law.entries]
            if any(p < 0 for p in probs):
                out.append(f"{tag}: negative law probability")
            if abs(sum(probs) - 1.0) > NORMALIZATION_TOL:
                out.append(f"{tag}: law not normalized")
            for perm, _ in law.entries:
                if sorted(perm) != list(e.vertices):
                    out.append(f"{tag}: law permutation {list(perm)} is not a bijection of the edge")
                    break
        elif law.kind not in ("uniform", "transposition", "explicit"):
            out.append(f"{tag}: unknown law {law.kind!r}")
    if require_connected and not out and not move_graph_connected(instance):
        out.append("single-particle move graph not connected")
    return ValidationReport(out)


def require_valid(instance: HypergraphInstance, require_connected: bool = True) -> None:
    report = validate_instance(instance, require_connected)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))


def move_graph_connected(instance: HypergraphInstance) -> bool:
    from scipy.sparse.csgraph import connected_components

    ncomp, _ = connected_components(instance.single_particle_rates() > 0, connection="strong")
    return ncomp == 1


def interaction_rate_R(instance: HypergraphInstance) -> float:
    """Sum of ``r_e |e| (|e|-1)`` over edges."""
    return float(sum(e.rate * e.size * (e.size - 1) for e in instance.edges))


def pair_interaction_rate(instance: HypergraphInstance) -> float:
    """Equilibrium rate at which two given particles interact: ``R / (n(n-1))``."""
    n = instance.n
    return interaction_rate_R(instance) / (n * (n - 1))


def apply_permutation(config: Sequence[int], edge: Hyperedge, sigma: Sequence[int]) -> Config:
    """Lift ``sigma`` (images of ``edge.vertices``) to a labelled configuration."""
    if len(sigma) != len(edge.vertices) or sorted(sigma) != list(edge.vertices):
        raise ValueError("invalid permutation")
    mapping = dict(zip(edge.vertices, sigma))
    return tuple(mapping.get(x, x) for x in config)


@dataclass
class StateSpace:
    kind: str
    n: int
    k: int
    states: list[Config]
    index: dict[Config, int]

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i: int) -> Config:
        return self.states[i]


def state_count(kind: str, n: int, k: int) -> int:
    kind = kind.upper()
    if kind == "RW":
        return n**k
    if kind in ("IP", "Q2"):
        return math.perm(n, k)
    if kind == "EX":
        return math.comb(n, k)
    raise ValueError(f"unknown process kind {kind!r}")


def enumerate_states(spec: ProcessSpec, budget: int = DEFAULT_BUDGET) -> StateSpace:
    """Lexicographically ordered state list with its inverse index map."""
    n, k = spec.instance.n, spec.k
    count = state_count(spec.kind, n, k)
    if count > budget:
        raise StateSpaceTooLarge(
            f"state space too large: {spec.label} on n={n} has {count} states "
            f"(budget {budget}); use the Monte Carlo estimators instead"
        )
    if spec.kind == "RW":
        states = list(itertools.product(range(n), repeat=k))
    elif spec.kind in ("IP", "Q2"):
        states = list(itertools.permutations(range(n), k))
    else:
        states = list(itertools.combinations(range(n), k))
    return StateSpace(spec.kind, n, k, states, {s: i for i, s in enumerate(states)})


@dataclass
class ChainCheck:
    k: int
    n_states: int
    irreducible: bool
    n_classes: int
    reachable_from_first: int
    uniform_stationary: bool
    reversible: bool


@dataclass
class AssumptionReport:
    checks: dict[int, ChainCheck]

    @property
    def ip2(self) -> ChainCheck:
        return self.checks[2]

    @property
    def ok(self) -> bool:
        ip2 = self.checks[2]
        return ip2.irreducible and ip2.uniform_stationary


def check_ip2_assumptions(
    instance: HypergraphInstance, ks: Iterable[int] = (), budget: int = DEFAULT_BUDGET
) -> AssumptionReport:
    """Irreducibility, uniform stationarity and reversibility of IP(2) and IP(k) for ``ks``."""
    from scipy.sparse.csgraph import breadth_first_order, connected_components

    from .exact import build_generator

    require_valid(instance, require_connected=False)
    checks: dict[int, ChainCheck] = {}
    for k in sorted({2, *ks}):
        gen = build_generator(ProcessSpec("IP", k, instance), budget=budget, stationary="none")
        Q = gen.Q
        adj = (Q - _diag(Q)) != 0
        ncomp, _ = connected_components(adj, connection="strong")
        reach = len(breadth_first_order(adj, 0, directed=True, return_predecessors=False))
        colsum = np.asarray(Q.sum(axis=0)).ravel()
        uniform = bool(np.max(np.abs(colsum)) <= STATIONARITY_TOL)
        # detailed balance w.r.t. uniform is symmetry of Q
        asym = abs(Q - Q.T)
        reversible = uniform and (asym.nnz == 0 or float(asym.max()) <= STATIONARITY_TOL)
        checks[k] = ChainCheck(k, len(gen.states), ncomp == 1, int(ncomp), int(reach), uniform, reversible)
    return AssumptionReport(checks)


def _diag(Q):
    import scipy.sparse as sp

    return sp.diags(Q.diagonal())
