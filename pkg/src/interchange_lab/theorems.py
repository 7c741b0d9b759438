"""Inequality harness for the mixing-time and relaxation-time bounds.

Every check returns :class:`VerificationReport` objects.  Assertions only use
explicit, proof-traceable quantities; unquantified universal constants are
never asserted, their empirical proxies are reported as exploratory.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .exact import (
    GeneratorMatrix,
    ReducibleChainError,
    bar_d_from_kernel,
    build_generator,
    expected_interactions_all,
    mixing_time,
    probJ_all,
    relaxation_time,
    transition_matrix,
    tv_curve,
    mixing_time_from_curve,
)
from .model import (
    DEFAULT_BUDGET,
    HypergraphInstance,
    ProcessSpec,
    StateSpaceTooLarge,
    interaction_rate_R,
    state_count,
)
from .report import VerificationReport
from .sim import RngSpec, estimate_probJ

MIX_RTOL = 1e-11
TIME_TOL = 1e-9
PROB_TOL = 1e-9
CORR_TOL = 1e-10
CAPUTO_CONSTANT = 120.0
AUG_STATE_LIMIT = 100_000
MC_REPLICAS = 10_000

EXACT = "exact"


@lru_cache(maxsize=128)
def generator(kind: str, k: int, instance: HypergraphInstance, budget: int = DEFAULT_BUDGET) -> GeneratorMatrix:
    """Cached generator; instances are immutable so they key the cache."""
    return build_generator(ProcessSpec(kind, k, instance), budget=budget)


@lru_cache(maxsize=1024)
def tmix(kind: str, k: int, instance: HypergraphInstance, eps: float) -> float:
    return mixing_time(generator(kind, k, instance), eps, rtol=MIX_RTOL)


@lru_cache(maxsize=128)
def trel(kind: str, k: int, instance: HypergraphInstance) -> float:
    return relaxation_time(generator(kind, k, instance))


@lru_cache(maxsize=256)
def _probJ(instance: HypergraphInstance, k: int, s: float) -> np.ndarray:
    return probJ_all(ProcessSpec("IP", k, instance), s, generator("IP", k, instance))


def clear_caches() -> None:
    for fn in (generator, tmix, trel, _probJ):
        fn.cache_clear()


def eps_range_ok(eps: float, k: int) -> bool:
    return 0 < eps <= min(0.25, 1.0 / k) + 1e-15


def default_eps_grid(k: int) -> list[float]:
    """1/4, 1/8 and 1/k, clipped into the admissible range ``(0, 1/4 ^ 1/k]``."""
    cap = min(0.25, 1.0 / k)
    return sorted({min(e, cap) for e in (0.25, 0.125, 1.0 / k)}, reverse=True)


# ---------------------------------------------------------------------------
# delta and the main bound
# ---------------------------------------------------------------------------


def delta(instance: HypergraphInstance, eps: float, k: int) -> float:
    """``8 R k n^-2 t_mix^{IP(2)}(eps / 8k)``."""
    if k < 3:
        raise ValueError("delta is defined for k >= 3")
    if not eps_range_ok(eps, k):
        raise ValueError("eps must lie in (0, 1/4 ^ 1/k]")
    gen = generator("IP", 2, instance)
    if not gen.irreducible():
        raise ReducibleChainError("IP(2) is reducible")
    n = instance.n
    return 8.0 * interaction_rate_R(instance) * k / n**2 * tmix("IP", 2, instance, eps / (8 * k))


def delta_from_curve(instance: HypergraphInstance, eps: float, k: int, times: Sequence[float]) -> float:
    """Same quantity with the mixing time read off an IP(2) TV curve (grid upper bound)."""
    curve = tv_curve(generator("IP", 2, instance), times)
    return 8.0 * interaction_rate_R(instance) * k / instance.n**2 * mixing_time_from_curve(curve, eps / (8 * k))


def main_case(eps: float, k: int, d: float) -> tuple[int, int]:
    """(case, m): case 1 with m = 1 when eps/k >= 2 delta, else case 2."""
    if eps / k >= 2 * d:
        return 1, 1
    return 2, max(1, math.ceil(math.log(k / eps) / math.log(1.0 / d)))


def chain_base(instance: HypergraphInstance, k: int, t: float) -> float:
    """``2 max_x (1 - P[J_{t/2}(x)]) + bar d_1(t/2)``, the per-step contraction factor."""
    pj = _probJ(instance, k, t / 2)
    rw1 = generator("IP", 1, instance)
    d1 = bar_d_from_kernel(rw1.states, transition_matrix(rw1, t / 2, 1e-13))
    return 2.0 * float(np.max(1.0 - pj)) + d1


def verify_theorem_main(instance: HypergraphInstance, eps: float, k: int) -> list[VerificationReport]:
    """Explicit form of the small-delta bound, plus a non-vacuous chain check.

    The first report is the gated bound ``t_mix^{IP(k)}(eps) <= m t`` with
    ``t = 2 t_mix^{IP(2)}(eps/16k^2)`` and ``m`` from the case split.  The
    second composes the exact contraction factor ``b`` over ``m'`` steps with
    ``k b^m' <= eps``, which is informative even when ``delta >= 1``.  The
    third is the exploratory ratio ``t_mix^{IP(k)}(eps) / t_mix^{IP(2)}(eps)``.
    """
    params = {"n": instance.n, "k": k, "eps": eps}
    d = delta(instance, eps, k)
    t = 2.0 * tmix("IP", 2, instance, eps / (16 * k * k))
    params.update(delta=d, t=t)
    out = []
    if d >= 1:
        out.append(
            VerificationReport.condition_not_met(
                "mixing bound (delta < 1)", params, {"delta": d, "reason": "delta >= 1"}
            )
        )
    else:
        case, m = main_case(eps, k, d)
        lhs = tmix("IP", k, instance, eps)
        out.append(
            VerificationReport(
                "mixing bound (delta < 1)",
                lhs,
                m * t,
                tol=TIME_TOL,
                params={**params, "case": case, "m": m},
                provenance={"t_mix": EXACT},
                details={"case": case, "m": m},
            )
        )
    out.append(_chain_report("mixing bound (exact chain)", instance, eps, k, t, params))
    tr = trel("RW", 1, instance)
    grid = np.geomspace(0.02 * tr, 20 * tr, 41)
    scored = []
    for tt in grid:
        b = chain_base(instance, k, float(tt))
        if b < 1:
            scored.append((_steps(b, k, eps) * float(tt), float(tt)))
    if scored:
        best_t = min(scored)[1]
        out.append(_chain_report("mixing bound (exact chain, best t)", instance, eps, k, best_t, params))
    else:
        out.append(
            VerificationReport.condition_not_met(
                "mixing bound (exact chain, best t)", params, {"reason": "contraction factor >= 1 on the whole grid"}
            )
        )
    ratio = tmix("IP", k, instance, eps) / tmix("IP", 2, instance, eps)
    out.append(
        VerificationReport(
            "t_mix IP(k)/IP(2) proxy",
            ratio,
            math.inf,
            params=params,
            provenance={"t_mix": EXACT},
            details={"ratio": ratio},
            asserted=False,
        )
    )
    return out


def _steps(b: float, k: int, eps: float) -> int:
    m = 1
    while k * b**m > eps:
        m += 1
    return m


def _chain_report(name: str, instance: HypergraphInstance, eps: float, k: int, t: float, params: dict) -> VerificationReport:
    """``t_mix^{IP(k)}(eps) <= m t`` once ``k b(t)^m <= eps`` with ``b(t) < 1``."""
    b = chain_base(instance, k, t)
    p = {**params, "t": t, "base": b}
    if b >= 1:
        return VerificationReport.condition_not_met(name, p, {"reason": "contraction factor >= 1"})
    m = _steps(b, k, eps)
    return VerificationReport(
        name,
        tmix("IP", k, instance, eps),
        m * t,
        tol=TIME_TOL,
        params={**p, "m": m},
        provenance={"t_mix": EXACT, "P[J]": EXACT, "bar_d_1": EXACT},
        details={"base": b, "m": m, "k_b_pow_m": k * b**m},
    )


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------


def probj_bound(instance: HypergraphInstance, eps: float, k: int, s: float) -> float:
    return 1.0 - eps / (16 * k) - s * k / instance.n**2 * interaction_rate_R(instance)


def verify_lemma_probJ(
    instance: HypergraphInstance,
    eps: float,
    k: int,
    starts: Iterable[Sequence[int]] | None = None,
    rng: RngSpec | None = None,
    replicas: int = MC_REPLICAS,
    workers: int = 1,
) -> VerificationReport:
    """``min_x P[J_s(x)] >= 1 - eps/16k - (s k / n^2) R`` at ``s = t_mix^{IP(2)}(eps/16k^2)``.

    Exact on every start while the augmented chain has at most
    ``AUG_STATE_LIMIT`` states; otherwise Monte Carlo on ``starts`` with a
    3 SE allowance.
    """
    s = tmix("IP", 2, instance, eps / (16 * k * k))
    rhs = probj_bound(instance, eps, k, s)
    params = {"n": instance.n, "k": k, "eps": eps, "s": s}
    if 2 * state_count("IP", instance.n, k) <= AUG_STATE_LIMIT:
        pj = _probJ(instance, k, s)
        i = int(np.argmin(pj))
        worst = generator("IP", k, instance).states.states[i]
        return VerificationReport(
            "P[J_s] lower bound",
            rhs,
            float(pj[i]),
            tol=PROB_TOL,
            params=params,
            provenance={"P[J]": EXACT},
            details={"min_probJ": float(pj[i]), "bound": rhs, "argmin": list(worst)},
        )
    if rng is None:
        raise ValueError("Monte Carlo fallback needs an RngSpec")
    if starts is None:
        raise StateSpaceTooLarge("exact P[J_s] over budget; supply sampled starts")
    best = None
    for j, start in enumerate(starts):
        est = estimate_probJ(instance, tuple(start), s, replicas, RngSpec(rng.seed, rng.stream + j), workers)
        if best is None or est.value < best[1].value:
            best = (tuple(start), est)
    start, est = best
    return VerificationReport(
        "P[J_s] lower bound",
        rhs,
        est.value,
        tol=3 * est.se + PROB_TOL,
        params={**params, "replicas": replicas},
        provenance={"P[J]": "MC +- SE"},
        details={"min_probJ": est.value, "se": est.se, "bound": rhs, "argmin": list(start)},
    )


def complete_graph_probJ(n: int, k: int, s: float) -> float:
    """On K_n with unit rates particle k meets each other particle at rate 1."""
    return math.exp(-(k - 1) * s)


def _bar_d(instance: HypergraphInstance, k: int, t: float) -> float:
    gen = generator("IP", k, instance)
    return bar_d_from_kernel(gen.states, transition_matrix(gen, t, 1e-13))


def verify_submultiplicativity(instance: HypergraphInstance, k: int, s: float, t: float) -> VerificationReport:
    """``bar d_k(s+t) <= bar d_k(t) (2 max_x (1 - P[J_{s/2}(x)]) + bar d_1(s/2))``."""
    lhs = _bar_d(instance, k, s + t)
    pj = _probJ(instance, k, s / 2)
    base = 2.0 * float(np.max(1.0 - pj)) + _bar_d(instance, 1, s / 2)
    bdt = _bar_d(instance, k, t)
    return VerificationReport(
        "bar d_k submultiplicativity",
        lhs,
        bdt * base,
        tol=PROB_TOL,
        params={"n": instance.n, "k": k, "s": s, "t": t},
        provenance={"bar_d": EXACT, "P[J]": EXACT},
        details={"bar_d_k_t": bdt, "factor": base},
    )


def default_st_grid(instance: HypergraphInstance, k: int, points: int = 3) -> list[float]:
    """Log-spaced from 0.1 t_rel to 10 t_mix(1/4) of IP(k)."""
    gen = generator("IP", k, instance)
    lo = 0.1 / max(float(np.max(gen.exit_rates())), 1e-300)
    try:
        lo = 0.1 * trel("IP", k, instance)
    except ValueError:
        pass
    hi = 10.0 * tmix("IP", k, instance, 0.25)
    return [float(x) for x in np.geomspace(lo, hi, points)]


def submultiplicativity_grid(
    instance: HypergraphInstance, k: int, s_values: Sequence[float] | None = None, t_values: Sequence[float] | None = None
) -> list[VerificationReport]:
    grid = None if s_values is not None and t_values is not None else default_st_grid(instance, k)
    s_values = grid if s_values is None else s_values
    t_values = grid if t_values is None else t_values
    return [verify_submultiplicativity(instance, k, s, t) for s in s_values for t in t_values]


def verify_rw_sandwich(instance: HypergraphInstance, k: int, eps: float) -> list[VerificationReport]:
    """``1/2 t_mix^{RW(1)}(4 eps/k) <= t_mix^{RW(k)}(eps) <= t_mix^{RW(1)}(eps/k)``."""
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    if k < 3:
        raise ValueError("sandwich stated for k >= 3")
    mid = tmix("RW", k, instance, eps)
    low = 0.5 * tmix("RW", 1, instance, 4 * eps / k)
    high = tmix("RW", 1, instance, eps / k)
    params = {"n": instance.n, "k": k, "eps": eps}
    prov = {"t_mix": EXACT}
    return [
        VerificationReport("RW(k) sandwich lower", low, mid, tol=TIME_TOL, params=params, provenance=prov),
        VerificationReport("RW(k) sandwich upper", mid, high, tol=TIME_TOL, params=params, provenance=prov),
    ]


def verify_mixtrel(instance: HypergraphInstance, eps_values: Iterable[float] = (0.25, 0.1, 0.01)) -> list[VerificationReport]:
    """``t_rel log(1/2eps) <= t_mix(eps) <= t_rel log(N/eps)`` for RW(1) (N=n) and IP(2) (N=n^2)."""
    n = instance.n
    out = []
    for kind, k, size in (("RW", 1, n), ("IP", 2, n * n)):
        tr = trel(kind, k, instance)
        for eps in eps_values:
            tm = tmix(kind, k, instance, eps)
            params = {"n": n, "eps": eps, "t_rel": tr}
            label = "RW(1)" if kind == "RW" else "IP(2)"
            out.append(
                VerificationReport(
                    f"{label} t_rel log(1/2eps) <= t_mix", tr * math.log(1 / (2 * eps)), tm, tol=TIME_TOL, params=params
                )
            )
            out.append(
                VerificationReport(f"{label} t_mix <= t_rel log(N/eps)", tm, tr * math.log(size / eps), tol=TIME_TOL, params=params)
            )
    return out


def verify_mixing_submultiplicativity(
    instance: HypergraphInstance, kind: str, k: int, d: float, ells: Iterable[int] = (1, 2, 3)
) -> list[VerificationReport]:
    """``t_mix(d^l) <= l t_mix(d/2)``."""
    base = tmix(kind, k, instance, d / 2)
    return [
        VerificationReport(
            f"t_mix(d^l) <= l t_mix(d/2) [{kind}({k})]",
            tmix(kind, k, instance, d**ell),
            ell * base,
            tol=TIME_TOL,
            params={"n": instance.n, "d": d, "l": ell},
        )
        for ell in ells
    ]


# ---------------------------------------------------------------------------
# relaxation-time comparisons
# ---------------------------------------------------------------------------


def verify_clr(instance: HypergraphInstance, ks: Iterable[int] | None = None, rtol: float = 1e-8) -> list[VerificationReport]:
    """On graphs ``t_rel^{IP(k)} = t_rel^{RW(1)}`` for every k."""
    if not instance.is_graph():
        raise ValueError("regression stated for graphs")
    ks = range(2, instance.n) if ks is None else ks
    base = trel("RW", 1, instance)
    out = []
    for k in ks:
        val = trel("IP", k, instance)
        out.append(
            VerificationReport(
                f"t_rel IP({k}) = t_rel RW(1)",
                abs(val - base) / base,
                0.0,
                tol=rtol,
                params={"n": instance.n, "k": k},
                provenance={"t_rel": EXACT},
                details={"t_rel_ipk": val, "t_rel_rw1": base},
            )
        )
    return out


def verify_caputo_chain(
    instance: HypergraphInstance, ks: Iterable[int], constant: float = CAPUTO_CONSTANT
) -> list[VerificationReport]:
    """``t_rel^{IP(k)} <= constant t_rel^{RW(1)}`` on uniform-law instances; ratio reported."""
    base = trel("RW", 1, instance)
    out = []
    for k in ks:
        gen = generator("IP", k, instance)
        if not gen.reversible:
            out.append(VerificationReport.condition_not_met(f"t_rel IP({k}) <= {constant:g} t_rel RW(1)", {"k": k}))
            continue
        val = trel("IP", k, instance)
        out.append(
            VerificationReport(
                f"t_rel IP({k}) <= {constant:g} t_rel RW(1)",
                val,
                constant * base,
                tol=TIME_TOL,
                params={"n": instance.n, "k": k},
                provenance={"t_rel": EXACT},
                details={"ratio": val / base},
            )
        )
    return out


def ratio_curve(instance: HypergraphInstance, eps_values: Iterable[float]) -> list[VerificationReport]:
    """``t_mix^{IP(2)}(eps) / t_mix^{RW(1)}(eps)``; reported, never asserted."""
    out = []
    for eps in eps_values:
        r = tmix("IP", 2, instance, eps) / tmix("RW", 1, instance, eps)
        out.append(
            VerificationReport(
                "t_mix IP(2)/RW(1)", r, math.inf, params={"n": instance.n, "eps": eps}, details={"ratio": r}, asserted=False
            )
        )
    return out


# ---------------------------------------------------------------------------
# heat kernel, negative correlation, interactions
# ---------------------------------------------------------------------------


def return_excess(instance: HypergraphInstance, t: float) -> float:
    """``max_x p_t(x,x) - 1/n`` for RW(1)."""
    P = transition_matrix(generator("RW", 1, instance), t, 1e-14)
    return float(np.max(np.diag(P))) - 1.0 / instance.n


def check_hk_theta(
    instance: HypergraphInstance, theta: float, c: float, times: Iterable[float]
) -> list[VerificationReport]:
    """HK-(theta) on the grid points ``t >= t_rel``, with the minimal-c profile.

    The spectral cross-check uses ``p_t(x,x) - 1/n = sum_j e^{-lambda_j t} phi_j(x)^2``,
    which decays at least at rate ``1/t_rel`` from any earlier ``t0``.
    """
    tr = trel("RW", 1, instance)
    ts = sorted(float(t) for t in times if t >= tr)
    if not ts:
        raise ValueError("no grid time at or above t_rel")
    h = np.array([return_excess(instance, t) for t in ts])
    ts_arr = np.array(ts)
    need = h * ts_arr ** (1 + theta)
    out = []
    for t, hv, cv in zip(ts, h, need):
        out.append(
            VerificationReport(
                "HK-(theta)",
                float(hv),
                c / t ** (1 + theta),
                tol=1e-12,
                params={"t": t, "theta": theta, "c": c, "t_rel": tr},
                provenance={"p_t": EXACT},
                details={"minimal_c": float(cv)},
            )
        )
    c_min = float(np.max(need))
    out.append(
        VerificationReport(
            "HK-(theta) minimal c on grid",
            c_min,
            c,
            tol=1e-12,
            params={"theta": theta, "grid": ts},
            details={"profile": need.tolist()},
            asserted=False,
        )
    )
    t0, h0 = ts[0], float(h[0])
    for t, hv in zip(ts[1:], h[1:]):
        out.append(
            VerificationReport(
                "return excess spectral decay",
                float(hv),
                h0 * math.exp(-(t - t0) / tr),
                tol=1e-12,
                params={"t0": t0, "t": t, "t_rel": tr},
            )
        )
    return out


def _edges_as_sets(instance: HypergraphInstance) -> list[tuple[int, ...]]:
    return [e.vertices for e in instance.edges]


def verify_negative_correlation(
    instance: HypergraphInstance, t: float, pairs: Iterable[tuple[int, int]] | None = None, exploratory: bool = False
) -> VerificationReport:
    """``P[I_t(a) in e, I_t(b) in e] <= P[I_t(a) in e] P[I_t(b) in e]`` over all edges e.

    Joint law from the IP(2) kernel, marginals from RW(1).  Only asserted on
    graphs; ``exploratory=True`` evaluates hyperedges without asserting.
    """
    if not instance.is_graph() and not exploratory:
        raise ValueError("property specific to graphs")
    n = instance.n
    g2 = generator("IP", 2, instance)
    P2 = transition_matrix(g2, t, 1e-14)
    P1 = transition_matrix(generator("RW", 1, instance), t, 1e-14)
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b] if pairs is None else list(pairs)
    states = g2.states.states
    worst = (-math.inf, None)
    checked = 0
    for verts in _edges_as_sets(instance):
        vs = set(verts)
        inside = np.array([s[0] in vs and s[1] in vs for s in states], dtype=float)
        marg = P1[:, list(verts)].sum(axis=1)
        for a, b in pairs:
            joint = float(P2[g2.index((a, b))] @ inside)
            excess = joint - marg[a] * marg[b]
            checked += 1
            if excess > worst[0]:
                worst = (excess, (a, b, list(verts), joint, float(marg[a] * marg[b])))
    excess, (a, b, e, joint, prod) = worst
    return VerificationReport(
        "negative correlation",
        joint,
        prod,
        tol=CORR_TOL,
        params={"n": n, "t": t},
        provenance={"joint": "exact IP(2)", "marginals": "exact RW(1)"},
        details={"worst_pair": [a, b], "worst_edge": e, "max_excess": excess, "checked": checked},
        asserted=not exploratory,
    )


def _regular_degree(instance: HypergraphInstance) -> int:
    if not instance.is_graph():
        raise ValueError("interaction bound stated for graphs")
    if any(e.rate != 1.0 for e in instance.edges):
        raise ValueError("interaction bound stated for unit rates")
    deg = instance.degree()
    if len(set(deg.tolist())) != 1:
        raise ValueError("graph is not regular")
    return int(deg[0])


def verify_heat_kernel_identity(instance: HypergraphInstance, t: float) -> VerificationReport:
    """``sum_x sum_{y~x} (p_t(a,x)^2 + p_t(a,y)^2) = 2 d p_{2t}(a,a)`` for every a."""
    d = _regular_degree(instance)
    gen = generator("RW", 1, instance)
    P = transition_matrix(gen, t, 1e-14)
    P2 = transition_matrix(gen, 2 * t, 1e-14)
    lhs = np.zeros(instance.n)
    for u, v in _edges_as_sets(instance):
        # each undirected edge appears as (x,y) and (y,x) in the ordered double sum
        lhs += 2 * (P[:, u] ** 2 + P[:, v] ** 2)
    err = float(np.max(np.abs(lhs - 2 * d * np.diag(P2))))
    return VerificationReport(
        "heat-kernel square identity", err, 0.0, tol=1e-10, params={"n": instance.n, "t": t, "d": d}
    )


def verify_interaction_bound_EN(
    instance: HypergraphInstance, eps: float = 0.25, alpha: float = 1.0
) -> list[VerificationReport]:
    """``E[N_(s,2s)(a,b)] <= 4d (s/n + s (max_z p_2s(z,z) - 1/n))`` with ``s = alpha t_mix^{RW(1)}(eps)``."""
    d = _regular_degree(instance)
    n = instance.n
    s = alpha * tmix("RW", 1, instance, eps)
    g2 = generator("IP", 2, instance)
    EN = expected_interactions_all(g2, instance, (0, 1), (s, 2 * s))
    rhs = 4 * d * (s / n + s * return_excess(instance, 2 * s))
    i = int(np.argmax(EN))
    return [
        verify_heat_kernel_identity(instance, s),
        VerificationReport(
            "expected interactions bound",
            float(EN[i]),
            rhs,
            tol=1e-10,
            params={"n": n, "d": d, "eps": eps, "alpha": alpha, "s": s},
            provenance={"E[N]": EXACT, "p_t": EXACT},
            details={"worst_start": list(g2.states.states[i]), "pairs_checked": len(EN)},
        ),
    ]
