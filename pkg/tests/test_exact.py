import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from interchange_lab.exact import (
    NonReversibleError,
    ReducibleChainError,
    bar_d_k,
    build_censored_q2,
    build_generator,
    exact_expected_interactions,
    exact_probJ,
    expected_interactions_all,
    expm_action,
    export_generator,
    load_generator_coo,
    mixing_time,
    probJ_all,
    relaxation_time,
    spectral_gap,
    transition_matrix,
    tv_curve,
    worst_case_d,
)
from interchange_lab.instances import complete, complete_uniform, cycle, path, three_cycle_instance
from interchange_lab.model import Hyperedge, HypergraphInstance, PermutationLaw, ProcessSpec


def two_state(rate=1.0):
    return HypergraphInstance(2, (Hyperedge((0, 1), rate, PermutationLaw.transposition()),), allow_small=True)


def test_generator_rows_sum_to_zero():
    for kind, k in (("RW", 2), ("IP", 3), ("EX", 2), ("Q2", 2)):
        gen = build_generator(ProcessSpec(kind, k, complete_uniform(5, 3)))
        assert np.max(np.abs(gen.Q.sum(axis=1))) < 1e-12
        assert np.all(gen.Q.diagonal() <= 0)
        assert math.isclose(gen.pi.sum(), 1.0)


def test_two_state_kernel_closed_form():
    gen = build_generator(ProcessSpec("RW", 1, two_state(1.5)))
    for t in (0.0, 0.1, 1.0, 4.0):
        P = transition_matrix(gen, t)
        stay = 0.5 + 0.5 * math.exp(-3.0 * t)
        assert np.allclose(P, [[stay, 1 - stay], [1 - stay, stay]], atol=1e-12)
    # d(t) = exp(-2 r t)/2 crosses eps at log(1/2eps) / 2r
    eps = 0.1
    assert math.isclose(mixing_time(gen, eps, rtol=1e-12), math.log(1 / (2 * eps)) / 3.0, rel_tol=1e-9)
    assert math.isclose(spectral_gap(gen), 3.0)


@pytest.mark.parametrize("t", [0.05, 0.7, 3.0, 25.0])
def test_uniformization_matches_scipy_expm(t):
    gen = build_generator(ProcessSpec("IP", 2, cycle(5)))
    ref = sla.expm(t * gen.dense())
    assert np.max(np.abs(transition_matrix(gen, t) - ref)) < 1e-10
    v = np.random.default_rng(0).random(gen.n_states)
    assert np.max(np.abs(expm_action(gen, t, v) - ref @ v)) < 1e-10


def test_non_uniform_stationary_law():
    inst = HypergraphInstance(
        3, (Hyperedge((0, 1), 1.0, PermutationLaw.explicit([((1, 0), 0.5), ((0, 1), 0.5)])), Hyperedge((0, 1, 2), 2.0))
    )
    gen = build_generator(ProcessSpec("IP", 1, inst))
    assert np.allclose(gen.pi @ gen.dense(), 0, atol=1e-12)


def test_exclusion_lumping_and_gap():
    inst = cycle(6)
    ex = build_generator(ProcessSpec("EX", 3, inst))
    assert ex.n_states == 20
    assert relaxation_time(ex) <= relaxation_time(build_generator(ProcessSpec("IP", 3, inst))) + 1e-9


def test_censored_q2_on_three_path_by_hand():
    # RW(2) on 0-1-2; from (0,1) one reaches (1,1) or (0,0) at rate 1, which
    # exit uniformly to their four resp. two neighbours
    gen = build_censored_q2(path(3))
    Q = gen.dense()
    i = gen.index((0, 1))
    expect = {(0, 2): 1.0, (2, 1): 0.25, (1, 0): 0.75, (1, 2): 0.25}
    for state, rate in expect.items():
        assert math.isclose(Q[i, gen.index(state)], rate, abs_tol=1e-12)
    assert math.isclose(-Q[i, i], sum(expect.values()))
    assert gen.reversible


def test_q2_gap_dominates_rw2():
    for inst in (cycle(5), complete(4), complete_uniform(5, 3)):
        q2 = build_censored_q2(inst)
        rw2 = build_generator(ProcessSpec("RW", 2, inst))
        assert relaxation_time(q2) <= relaxation_time(rw2) + 1e-9


def test_reducible_chain_is_rejected():
    gen = build_generator(ProcessSpec("IP", 4, three_cycle_instance()))
    assert not gen.irreducible()
    with pytest.raises(ReducibleChainError, match="reducible"):
        mixing_time(gen, 0.25)


def test_nonreversible_relaxation_rejected():
    law = PermutationLaw.explicit([((1, 2, 0), 1.0)])
    inst = HypergraphInstance(3, (Hyperedge((0, 1, 2), 1.0, law),))
    gen = build_generator(ProcessSpec("RW", 1, inst))
    assert not gen.reversible
    with pytest.raises(NonReversibleError):
        relaxation_time(gen)


def test_tv_curve_is_monotone_and_consistent():
    gen = build_generator(ProcessSpec("IP", 2, cycle(5)))
    curve = tv_curve(gen, np.linspace(0, 4, 17), with_bar_d=True)
    assert curve.is_monotone()
    assert math.isclose(curve.d[5], worst_case_d(gen, curve.times[5]), abs_tol=1e-12)
    assert math.isclose(curve.bar_d[5], bar_d_k(ProcessSpec("IP", 2, cycle(5)), curve.times[5]), abs_tol=1e-12)
    assert np.all(curve.bar_d <= 2 * curve.d + 1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.9))
def test_mixing_time_is_crossing_time(eps):
    gen = build_generator(ProcessSpec("RW", 1, cycle(5)))
    tm = mixing_time(gen, eps, rtol=1e-10)
    assert worst_case_d(gen, tm) <= eps + 1e-8
    if tm > 0:
        assert worst_case_d(gen, tm * (1 - 1e-6)) > eps - 1e-8


def test_probj_complete_graph_and_window():
    inst = complete(5)
    for s in (0.2, 1.1):
        assert math.isclose(exact_probJ(ProcessSpec("IP", 3, inst), (0, 1, 2), s), math.exp(-2 * s), abs_tol=1e-10)
    pj = probJ_all(ProcessSpec("IP", 2, cycle(5)), 0.0)
    assert np.allclose(pj, 1.0)


def test_expected_interactions_against_quadrature():
    inst = cycle(6)
    spec = ProcessSpec("IP", 2, inst)
    gen = build_generator(spec)
    start, window = (0, 2), (0.3, 1.4)
    got = exact_expected_interactions(spec, (0, 1), start, window, gen=gen)
    # interaction rate in state x is the rate of the edge holding both particles
    rate = np.array([1.0 if abs(x[0] - x[1]) % 6 in (1, 5) else 0.0 for x in gen.states.states])
    P = lambda t: sla.expm(t * gen.dense())[gen.index(start)] @ rate  # noqa: E731
    ref, _ = integrate.quad(P, *window, epsabs=1e-12)
    assert math.isclose(got, ref, rel_tol=1e-7)
    allv = expected_interactions_all(gen, inst, (0, 1), window)
    assert math.isclose(allv[gen.index(start)], got, rel_tol=1e-10)


def test_export_round_trip(tmp_path):
    gen = build_generator(ProcessSpec("IP", 2, cycle(4)))
    coo, legend = export_generator(gen, tmp_path / "g")
    Q = load_generator_coo(coo, gen.n_states)
    assert np.array_equal(Q.toarray(), gen.dense())
    lines = open(legend).read().splitlines()
    assert lines[0] == "0 0 1"
