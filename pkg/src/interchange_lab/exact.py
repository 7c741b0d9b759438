"""Explicit generators, kernels, distances to stationarity and spectral quantities.

Kernels ``P(t) = exp(tQ)`` are computed by uniformization: with
``lam >= max_a |Q(a,a)|`` and ``P = I + Q/lam``,
``exp(tQ) = sum_j Poisson(lam t)(j) P^j``.  Long horizons are handled by
uniformizing over ``t / 2^m`` and squaring ``m`` times, with the truncation
tolerance split accordingly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import integrate, linalg, stats
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh, expm_multiply

from .model import (
    DEFAULT_BUDGET,
    STATIONARITY_TOL,
    Config,
    HypergraphInstance,
    ProcessSpec,
    StateSpace,
    enumerate_states,
    require_valid,
)

ROW_SUM_TOL = 1e-12
DENSE_EIG_LIMIT = 2000


class ReducibleChainError(ValueError):
    pass


class NonReversibleError(ValueError):
    pass


@dataclass
class GeneratorMatrix:
    """Sparse rate matrix over an enumerated state space."""

    label: str
    states: StateSpace
    Q: sp.csr_matrix
    pi: np.ndarray | None = None
    reversible: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.Q.shape[0]

    def dense(self) -> np.ndarray:
        return self.Q.toarray()

    def exit_rates(self) -> np.ndarray:
        return -self.Q.diagonal()

    def irreducible(self) -> bool:
        if self.n_states == 1:
            return True
        ncomp, _ = connected_components(_offdiag(self.Q) != 0, connection="strong")
        return ncomp == 1

    def index(self, state: Sequence[int]) -> int:
        return self.states.index[tuple(state)]


def _offdiag(Q: sp.spmatrix) -> sp.csr_matrix:
    Q = sp.csr_matrix(Q, copy=True)
    Q.setdiag(0)
    Q.eliminate_zeros()
    return Q


def _assemble(rows, cols, vals, size: int) -> sp.csr_matrix:
    """Off-diagonal rates -> generator (diagonal = minus row sum)."""
    off = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    off.setdiag(0)
    off.eliminate_zeros()
    out = off - sp.diags(np.asarray(off.sum(axis=1)).ravel())
    return sp.csr_matrix(out)


def _ip_generator(instance: HypergraphInstance, space: StateSpace) -> sp.csr_matrix:
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    tables = []
    for e in instance.edges:
        verts = set(e.vertices)
        maps = [(dict(zip(e.vertices, perm)), p) for perm, p in e.support()]
        tables.append((verts, e.rate, maps))
    index = space.index
    for i, a in enumerate(space.states):
        for verts, rate, maps in tables:
            if verts.isdisjoint(a):
                continue
            for mapping, p in maps:
                b = tuple(mapping.get(x, x) for x in a)
                if b != a and p > 0:
                    rows.append(i)
                    cols.append(index[b])
                    vals.append(rate * p)
    return _assemble(rows, cols, vals, len(space))


def single_particle_generator(instance: HypergraphInstance) -> sp.csr_matrix:
    rates = instance.single_particle_rates()
    return sp.csr_matrix(rates - np.diag(rates.sum(axis=1)))


def _rw_generator(instance: HypergraphInstance, k: int) -> sp.csr_matrix:
    G1 = single_particle_generator(instance)
    n = instance.n
    Q = sp.csr_matrix((n**k, n**k))
    for i in range(k):
        left = sp.identity(n**i, format="csr")
        right = sp.identity(n ** (k - 1 - i), format="csr")
        Q = Q + sp.kron(sp.kron(left, G1), right, format="csr")
    return sp.csr_matrix(Q)


def stationary_distribution(Q: sp.spmatrix) -> np.ndarray:
    """Stationary law of an irreducible generator (uniform shortcut when it applies)."""
    N = Q.shape[0]
    colsum = np.asarray(Q.sum(axis=0)).ravel()
    if np.max(np.abs(colsum)) <= STATIONARITY_TOL:
        return np.full(N, 1.0 / N)
    A = sp.csr_matrix(Q.T, copy=True).tolil()
    A[N - 1, :] = np.ones(N)
    b = np.zeros(N)
    b[-1] = 1.0
    pi = sp.linalg.spsolve(A.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def detailed_balance_residual(Q: sp.spmatrix, pi: np.ndarray) -> float:
    F = sp.diags(pi) @ Q
    diff = abs(F - F.T)
    return float(diff.max()) if diff.nnz else 0.0


def _finish(label, space, Q, stationary: str, meta=None) -> GeneratorMatrix:
    gen = GeneratorMatrix(label, space, sp.csr_matrix(Q), meta=dict(meta or {}))
    if stationary == "none":
        return gen
    colsum = np.asarray(gen.Q.sum(axis=0)).ravel()
    if np.max(np.abs(colsum)) <= STATIONARITY_TOL:
        gen.pi = np.full(gen.n_states, 1.0 / gen.n_states)
    elif gen.irreducible():
        gen.pi = stationary_distribution(gen.Q)
    if gen.pi is not None:
        gen.reversible = detailed_balance_residual(gen.Q, gen.pi) <= STATIONARITY_TOL
    return gen


def build_generator(
    spec: ProcessSpec, budget: int = DEFAULT_BUDGET, stationary: str = "auto"
) -> GeneratorMatrix:
    """Generator of RW(k), IP(k), EX(k) or Q(2) on ``spec.instance``.

    Self-loop transitions (permutations fixing the configuration) are dropped.
    EX(k) is obtained by lumping IP(k); Q(2) by censoring RW(2).
    """
    instance = spec.instance
    require_valid(instance, require_connected=False)
    if spec.kind == "Q2":
        return build_censored_q2(instance, budget=budget)
    if spec.kind == "EX":
        ip = build_generator(ProcessSpec("IP", spec.k, instance), budget=budget, stationary=stationary)
        return project_to_exclusion(ip)
    space = enumerate_states(spec, budget)
    if spec.kind == "IP":
        Q = _ip_generator(instance, space)
    else:
        Q = _rw_generator(instance, spec.k)
    return _finish(spec.label, space, Q, stationary, {"kind": spec.kind, "k": spec.k})


def project_to_exclusion(ip_gen: GeneratorMatrix, tol: float = 1e-12) -> GeneratorMatrix:
    """Lump an IP(k) generator onto k-subsets, asserting the lumping is exact."""
    space = ip_gen.states
    n, k = space.n, space.k
    ex_space = enumerate_states(
        ProcessSpec("EX", k, _dummy_instance(n)), budget=max(len(space), 1)
    )
    N = len(ex_space)
    labelling = np.array([ex_space.index[tuple(sorted(s))] for s in space.states])
    # aggregate rates from each labelled state to each subset
    L = sp.csr_matrix((np.ones(len(space)), (np.arange(len(space)), labelling)), shape=(len(space), N))
    agg = (ip_gen.Q @ L).toarray()
    reps = {}
    for i, j in enumerate(labelling):
        if j not in reps:
            reps[j] = agg[i]
        elif np.max(np.abs(agg[i] - reps[j])) > tol:
            raise AssertionError(f"exclusion lumping inconsistent at subset {ex_space.states[j]}")
    Qex = np.array([reps[j] for j in range(N)])
    np.fill_diagonal(Qex, 0.0)
    Qex = Qex - np.diag(Qex.sum(axis=1))
    return _finish(f"EX({k})", ex_space, sp.csr_matrix(Qex), "auto", {"kind": "EX", "k": k})


def _dummy_instance(n: int) -> HypergraphInstance:
    from .model import Hyperedge

    return HypergraphInstance(n, (Hyperedge(tuple(range(n))),), allow_small=True)


def build_censored_q2(instance: HypergraphInstance, budget: int = DEFAULT_BUDGET) -> GeneratorMatrix:
    """RW(2) watched only while the walkers occupy distinct vertices.

    Schur complement ``Q_AA + Q_AB (-Q_BB)^{-1} Q_BA`` with ``A`` the
    off-diagonal pairs and ``B`` the coincident pairs ``(x, x)``.
    """
    require_valid(instance, require_connected=False)
    n = instance.n
    rw = build_generator(ProcessSpec("RW", 2, instance), budget=budget, stationary="none")
    space = enumerate_states(ProcessSpec("Q2", 2, instance), budget)
    A = np.array([x * n + y for x, y in space.states])
    B = np.array([x * n + x for x in range(n)])
    Q = rw.Q.tocsr()
    QAA = Q[A][:, A]
    QAB = Q[A][:, B]
    QBA = Q[B][:, A]
    QBB = Q[B][:, B]
    if np.any(np.abs(QBB.diagonal()) == 0):
        raise AssertionError("Q_BB singular: a vertex has no outgoing moves")
    X = sp.linalg.spsolve(sp.csc_matrix(-QBB), sp.csc_matrix(QBA))
    X = sp.csr_matrix(X)
    Qc = sp.csr_matrix(QAA + QAB @ X)
    Qc = _offdiag(Qc)
    Qc = Qc - sp.diags(np.asarray(Qc.sum(axis=1)).ravel())
    return _finish("Q(2)", space, Qc, "auto", {"kind": "Q2", "k": 2})


# ---------------------------------------------------------------------------
# uniformization
# ---------------------------------------------------------------------------


def _poisson_weights(x: float, tol: float) -> tuple[int, np.ndarray]:
    """Poisson(x) pmf on [lo, hi] carrying at least 1 - tol of the mass."""
    if x <= 0:
        return 0, np.ones(1)
    if x < 50:
        w = [math.exp(-x)]
        total = w[0]
        j = 0
        while 1.0 - total > tol and j < 10_000:
            j += 1
            w.append(w[-1] * x / j)
            total += w[-1]
        return 0, np.array(w)
    lo = int(stats.poisson.ppf(tol / 2, x))
    hi = int(stats.poisson.isf(tol / 2, x)) + 1
    j = np.arange(lo, hi + 1)
    return lo, stats.poisson.pmf(j, x)


def transition_matrix(gen: GeneratorMatrix, t: float, tol: float = 1e-10) -> np.ndarray:
    """Dense ``exp(tQ)`` by uniformization; rows renormalized, entries clamped at 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    N = gen.n_states
    lam = float(np.max(gen.exit_rates())) if N else 0.0
    if t == 0 or lam == 0:
        return np.eye(N)
    m = max(0, math.ceil(math.log2(lam * t / 2.0))) if lam * t > 2.0 else 0
    inner_tol = tol / 2**m
    tau = t / 2**m
    P = np.eye(N) + gen.dense() / lam
    _, w = _poisson_weights(lam * tau, inner_tol)
    out = w[0] * np.eye(N)
    term = np.eye(N)
    for wj in w[1:]:
        term = term @ P
        out += wj * term
    for _ in range(m):
        out = out @ out
    np.clip(out, 0.0, None, out=out)
    out /= out.sum(axis=1, keepdims=True)
    return out


def expm_action(gen: GeneratorMatrix | sp.spmatrix, t: float, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """``exp(tQ) v`` by uniformization with sparse products (v may be a matrix)."""
    Q = gen.Q if isinstance(gen, GeneratorMatrix) else sp.csr_matrix(gen)
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam = float(np.max(-Q.diagonal())) if Q.shape[0] else 0.0
    v = np.asarray(v, dtype=float)
    if t == 0 or lam == 0:
        return v.copy()
    P = sp.identity(Q.shape[0], format="csr") + Q / lam
    lo, w = _poisson_weights(lam * t, tol)
    term = v.copy()
    for _ in range(lo):
        term = P @ term
    out = w[0] * term
    for wj in w[1:]:
        term = P @ term
        out = out + wj * term
    return out


# ---------------------------------------------------------------------------
# distances and mixing
# ---------------------------------------------------------------------------


def tv(mu: np.ndarray, nu: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(mu) - np.asarray(nu)).sum())


def _require_pi(gen: GeneratorMatrix) -> np.ndarray:
    if gen.pi is None:
        raise ValueError(f"stationary distribution of {gen.label} unknown")
    return gen.pi


def worst_case_d(gen: GeneratorMatrix, t: float, tol: float = 1e-10) -> float:
    """``max_a || P_t(a, .) - pi ||_TV``."""
    pi = _require_pi(gen)
    P = transition_matrix(gen, t, tol)
    return float(0.5 * np.abs(P - pi[None, :]).sum(axis=1).max())


def bar_d_from_kernel(space: StateSpace, P: np.ndarray) -> float:
    """Worst TV between rows whose states agree in the first k-1 coordinates."""
    k = space.k
    if k == 1:
        return float(0.5 * np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2).max())
    groups: dict[Config, list[int]] = {}
    for i, s in enumerate(space.states):
        groups.setdefault(s[:-1], []).append(i)
    best = 0.0
    for idx in groups.values():
        rows = P[idx]
        d = 0.5 * np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2).max()
        best = max(best, float(d))
    return best


def bar_d_k(spec: ProcessSpec, t: float, gen: GeneratorMatrix | None = None, tol: float = 1e-10) -> float:
    """Worst TV between IP(k) laws from two starts sharing the first k-1 particles."""
    if spec.kind != "IP":
        raise ValueError("bar_d_k is defined for IP(k)")
    gen = gen or build_generator(spec)
    return bar_d_from_kernel(gen.states, transition_matrix(gen, t, tol))


def mixing_time(
    gen: GeneratorMatrix, eps: float, rtol: float = 1e-6, tol: float = 1e-12
) -> float:
    """``inf{t : d(t) <= eps}`` by bracketing and bisection on the monotone ``d``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not gen.irreducible():
        raise ReducibleChainError(f"mixing time infinite: {gen.label} is reducible")
    pi = _require_pi(gen)
    if 1.0 - float(pi.max()) <= eps:
        return 0.0
    lam = max(float(np.max(gen.exit_rates())), 1e-300)
    hi = 1.0 / lam
    while worst_case_d(gen, hi, tol) > eps:
        hi *= 2.0
        if hi > 1e12:
            raise ReducibleChainError("mixing time bracket diverged")
    lo = hi / 2.0 if hi > 1.0 / lam else 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if worst_case_d(gen, mid, tol) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _symmetrized(gen: GeneratorMatrix) -> sp.csr_matrix:
    pi = gen.pi
    if np.allclose(pi, pi[0], rtol=0, atol=1e-15):
        S = gen.Q
    else:
        D = sp.diags(np.sqrt(pi))
        Dinv = sp.diags(1.0 / np.sqrt(pi))
        S = D @ gen.Q @ Dinv
    return sp.csr_matrix(0.5 * (S + S.T))


def spectral_gap(gen: GeneratorMatrix, rtol: float = 1e-9) -> float:
    """Smallest nonzero eigenvalue of ``-Q`` for a reversible irreducible generator."""
    if gen.pi is None or not gen.reversible:
        raise NonReversibleError(
            f"spectral gap undefined in this artifact for non-reversible {gen.label}; "
            "use mixing times instead"
        )
    if not gen.irreducible():
        raise ReducibleChainError(f"{gen.label} is reducible (gap is zero)")
    N = gen.n_states
    if N == 1:
        return math.inf
    S = _symmetrized(gen)
    if N < DENSE_EIG_LIMIT:
        ev = linalg.eigvalsh(-S.toarray())
        return float(ev[1])
    # deflate the known null vector sqrt(pi), then Lanczos for the bottom of -S
    v = np.sqrt(gen.pi)
    shift = 2.0 * float(np.max(gen.exit_rates()))

    def matvec(x):
        return -(S @ x) + shift * v * (v @ x)

    op = sp.linalg.LinearOperator((N, N), matvec=matvec, dtype=float)
    vals = eigsh(op, k=1, which="SA", tol=rtol, return_eigenvectors=False)
    return float(vals[0])


def relaxation_time(gen: GeneratorMatrix) -> float:
    return 1.0 / spectral_gap(gen)


def gap_eigvec(gen: GeneratorMatrix) -> tuple[float, np.ndarray]:
    """Spectral gap with its eigenvector (dense; uniform-pi generators)."""
    S = _symmetrized(gen).toarray()
    ev, vec = linalg.eigh(-S)
    return float(ev[1]), vec[:, 1]


# ---------------------------------------------------------------------------
# interactions and the avoidance event
# ---------------------------------------------------------------------------


def pair_edge_rate(instance: HypergraphInstance, u: int, v: int) -> float:
    """Total rate of edges containing both ``u`` and ``v``."""
    return float(sum(e.rate for e in instance.edges if u in e.vertices and v in e.vertices))


def _pair_rate_table(instance: HypergraphInstance) -> np.ndarray:
    n = instance.n
    table = np.zeros((n, n))
    for e in instance.edges:
        for u in e.vertices:
            for v in e.vertices:
                table[u, v] += e.rate
    return table


def augmented_generator(gen: GeneratorMatrix, instance: HypergraphInstance) -> sp.csr_matrix:
    """IP(k) x {clean, dirty}.

    From a clean state, every ring of an edge holding particle k together with
    another particle (whatever permutation it draws) moves the chain to the
    dirty copy of the post-ring state.  Dirty states follow IP(k).
    """
    space = gen.states
    N = len(space)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    tables = []
    for e in instance.edges:
        maps = [(dict(zip(e.vertices, perm)), p) for perm, p in e.support()]
        tables.append((set(e.vertices), e.rate, maps))
    for i, a in enumerate(space.states):
        last = a[-1]
        others = a[:-1]
        for verts, rate, maps in tables:
            if verts.isdisjoint(a):
                continue
            interacting = last in verts and any(x in verts for x in others)
            for mapping, p in maps:
                b = tuple(mapping.get(x, x) for x in a)
                j = space.index[b]
                if interacting:
                    rows.append(i)
                    cols.append(N + j)
                    vals.append(rate * p)
                elif j != i:
                    rows.append(i)
                    cols.append(j)
                    vals.append(rate * p)
    off = sp.coo_matrix((vals, (rows, cols)), shape=(2 * N, 2 * N)).tocsr()
    dirty = sp.block_diag((sp.csr_matrix((N, N)), _offdiag(gen.Q)), format="csr")
    off = sp.csr_matrix(off + dirty)
    off.setdiag(0)
    off.eliminate_zeros()
    return sp.csr_matrix(off - sp.diags(np.asarray(off.sum(axis=1)).ravel()))


def probJ_all(spec: ProcessSpec, s: float, gen: GeneratorMatrix | None = None, tol: float = 1e-13) -> np.ndarray:
    """P[J_s(x)] for every start x of IP(k), indexed like ``gen.states``.

    J_s: particle k has no interaction with particles 1..k-1 during (s, 2s].
    """
    if spec.kind != "IP":
        raise ValueError("J_s is defined for IP(k)")
    gen = gen or build_generator(spec)
    N = gen.n_states
    if spec.k == 1:
        return np.ones(N)
    aug = augmented_generator(gen, spec.instance)
    start = np.concatenate([np.ones(N), np.zeros(N)])
    clean = expm_action(aug, s, start, tol)[:N]
    return expm_action(gen, s, clean, tol)


def exact_probJ(spec: ProcessSpec, start: Sequence[int], s: float, gen: GeneratorMatrix | None = None) -> float:
    if spec.k == 1:
        return 1.0
    gen = gen or build_generator(spec)
    return float(probJ_all(spec, s, gen)[gen.index(start)])


def interaction_rate_vector(gen: GeneratorMatrix, instance: HypergraphInstance, i: int, j: int) -> np.ndarray:
    """rho_ij(state): total rate of edges containing the positions of particles i and j."""
    table = _pair_rate_table(instance)
    return np.array([table[s[i], s[j]] if s[i] != s[j] else _vertex_rate(instance, s[i]) for s in gen.states.states])


def _vertex_rate(instance: HypergraphInstance, v: int) -> float:
    return float(sum(e.rate for e in instance.edges if v in e.vertices))


def exact_expected_interactions(
    spec: ProcessSpec,
    pair: tuple[int, int],
    start: Sequence[int],
    window: tuple[float, float],
    gen: GeneratorMatrix | None = None,
    tol: float = 1e-8,
) -> float:
    """Expected number of interactions of particles ``pair`` during ``window``.

    Integral over the window of ``E[rho_ij(X_t)]``, by adaptive quadrature.
    """
    t1, t2 = window
    if not 0 <= t1 <= t2:
        raise ValueError("invalid window")
    if t2 == t1:
        return 0.0
    gen = gen or build_generator(spec)
    rho = interaction_rate_vector(gen, spec.instance, *pair)
    e0 = np.zeros(gen.n_states)
    e0[gen.index(start)] = 1.0
    # row vector evolution: d/dt p_t = p_t Q, i.e. exp(t Q^T) applied to e0
    QT = sp.csr_matrix(gen.Q.T)

    def integrand(t):
        return float(expm_action(QT, t, e0, 1e-13) @ rho)

    val, _ = integrate.quad(integrand, t1, t2, epsabs=tol * 1e-2, epsrel=tol, limit=200)
    return float(val)


def expected_interactions_all(
    gen: GeneratorMatrix, instance: HypergraphInstance, pair: tuple[int, int], window: tuple[float, float]
) -> np.ndarray:
    """Expected interactions of ``pair`` during ``window`` from every start.

    Uses ``int_0^T e^{uQ} rho du`` as the top-right block of the exponential
    of ``[[Q, rho], [0, 0]] T``.
    """
    t1, t2 = window
    if not 0 <= t1 <= t2:
        raise ValueError("invalid window")
    N = gen.n_states
    rho = interaction_rate_vector(gen, instance, *pair)
    if t2 == t1:
        return np.zeros(N)
    A = sp.bmat([[gen.Q, sp.csr_matrix(rho[:, None])], [None, sp.csr_matrix((1, 1))]], format="csc")
    v = np.zeros(N + 1)
    v[-1] = 1.0
    integral = expm_multiply(A * (t2 - t1), v)[:N]
    return expm_action(gen, t1, integral) if t1 > 0 else integral


# ---------------------------------------------------------------------------
# curves and export
# ---------------------------------------------------------------------------


@dataclass
class TVCurve:
    label: str
    times: np.ndarray
    d: np.ndarray
    bar_d: np.ndarray | None = None

    def is_monotone(self, slack: float = 1e-9) -> bool:
        ok = bool(np.all(np.diff(self.d) <= slack))
        if self.bar_d is not None:
            ok = ok and bool(np.all(np.diff(self.bar_d) <= slack))
        return ok

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "d", "bar_d_k"])
            for i, t in enumerate(self.times):
                bd = "" if self.bar_d is None else repr(float(self.bar_d[i]))
                w.writerow([repr(float(t)), repr(float(self.d[i])), bd])


def tv_curve(gen: GeneratorMatrix, times: Iterable[float], with_bar_d: bool = False, tol: float = 1e-10) -> TVCurve:
    pi = _require_pi(gen)
    ts = np.asarray(list(times), dtype=float)
    d = np.empty(len(ts))
    bd = np.empty(len(ts)) if with_bar_d else None
    for i, t in enumerate(ts):
        P = transition_matrix(gen, t, tol)
        d[i] = 0.5 * np.abs(P - pi[None, :]).sum(axis=1).max()
        if with_bar_d:
            bd[i] = bar_d_from_kernel(gen.states, P)
    return TVCurve(gen.label, ts, d, bd)


def mixing_time_from_curve(curve: TVCurve, eps: float) -> float:
    """First grid time with ``d <= eps`` (upper bound on the true crossing)."""
    hit = np.nonzero(curve.d <= eps)[0]
    if not len(hit):
        return math.inf
    return float(curve.times[hit[0]])


def export_generator(gen: GeneratorMatrix, path_prefix) -> tuple[str, str]:
    """Write ``<prefix>.coo`` (row col rate) and ``<prefix>.states`` (index state)."""
    coo = sp.coo_matrix(gen.Q)
    order = np.lexsort((coo.col, coo.row))
    coo_path = f"{path_prefix}.coo"
    legend_path = f"{path_prefix}.states"
    with open(coo_path, "w") as fh:
        for idx in order:
            fh.write(f"{coo.row[idx]} {coo.col[idx]} {float(coo.data[idx])!r}\n")
    with open(legend_path, "w") as fh:
        for i, s in enumerate(gen.states.states):
            fh.write(f"{i} {' '.join(map(str, s))}\n")
    return coo_path, legend_path


def load_generator_coo(path: str, n_states: int) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n_states, n_states))
