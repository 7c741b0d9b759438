import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interchange_lab.instances import (
    complete,
    complete_uniform,
    cycle,
    generate_instance,
    hypercube,
    parse_generator,
    three_cycle_instance,
    torus,
)
from interchange_lab.model import (
    Hyperedge,
    HypergraphInstance,
    PermutationLaw,
    ProcessSpec,
    StateSpaceTooLarge,
    apply_permutation,
    enumerate_states,
    interaction_rate_R,
    pair_interaction_rate,
    state_count,
    validate_instance,
)


def test_hyperedge_sorts_vertices_and_is_hashable():
    e = Hyperedge((3, 1, 2), 2)
    assert e.vertices == (1, 2, 3)
    assert e.rate == 2.0
    assert hash(e) == hash(Hyperedge((1, 2, 3), 2.0))


def test_uniform_support_is_all_permutations():
    supp = PermutationLaw.uniform().support((0, 1, 2))
    assert len(supp) == 6
    assert math.isclose(sum(p for _, p in supp), 1.0)


def test_transposition_requires_pair():
    with pytest.raises(ValueError):
        PermutationLaw.transposition().support((0, 1, 2))


@pytest.mark.parametrize(
    "inst, needle",
    [
        (HypergraphInstance(2, (Hyperedge((0, 1)),)), "n < 3"),
        (HypergraphInstance(3, ()), "no edges"),
        (HypergraphInstance(3, (Hyperedge((0, 5)),)), "out of range"),
        (HypergraphInstance(3, (Hyperedge((0, 1), 0.0),)), "nonpositive rate"),
        (HypergraphInstance(3, (Hyperedge((0, 1, 2), 1.0, PermutationLaw.transposition()),)), "transposition"),
        (HypergraphInstance(3, (Hyperedge((0, 1), 1.0, PermutationLaw.explicit([((1, 0), 0.4)])),)), "normalized"),
        (HypergraphInstance(3, (Hyperedge((0, 1), 1.0, PermutationLaw.explicit([((0, 2), 1.0)])),)), "bijection"),
        (HypergraphInstance(4, (Hyperedge((0, 1)), Hyperedge((2, 3)))), "not connected"),
    ],
)
def test_validation_catches(inst, needle):
    rep = validate_instance(inst)
    assert not rep.ok
    assert any(needle in v for v in rep.violations), rep.violations


def test_valid_instances():
    for inst in (cycle(5), complete_uniform(5, 3), three_cycle_instance(), torus(2, 3), hypercube(3)):
        assert validate_instance(inst).ok


def test_json_round_trip():
    inst = HypergraphInstance(
        4,
        (
            Hyperedge((0, 1), 1.5, PermutationLaw.transposition()),
            Hyperedge((1, 2, 3), 0.5),
            three_cycle_instance().edges[0],
        ),
    )
    back = HypergraphInstance.from_json(inst.to_json())
    assert back == inst


def test_interaction_rate():
    assert interaction_rate_R(cycle(6)) == 12.0
    assert interaction_rate_R(complete_uniform(4, 3)) == 4 * 6
    assert math.isclose(pair_interaction_rate(complete(5)), 1.0)


def test_state_counts_and_enumeration():
    inst = cycle(5)
    for kind, k, expect in (("RW", 2, 25), ("IP", 3, 60), ("EX", 2, 10), ("Q2", 2, 20)):
        assert state_count(kind, 5, k) == expect
        sp = enumerate_states(ProcessSpec(kind, k, inst))
        assert len(sp) == expect
        assert all(sp.index[s] == i for i, s in enumerate(sp.states))


def test_budget_guard():
    with pytest.raises(StateSpaceTooLarge, match="Monte Carlo"):
        enumerate_states(ProcessSpec("IP", 6, cycle(20)), budget=1000)


def test_process_spec_validation():
    with pytest.raises(ValueError):
        ProcessSpec("Q2", 3, cycle(5))
    with pytest.raises(ValueError):
        ProcessSpec("IP", 6, cycle(5))
    with pytest.raises(ValueError):
        ProcessSpec("XX", 1, cycle(5))


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(4)), st.lists(st.integers(0, 3), min_size=1, max_size=4, unique=True))
def test_apply_permutation_is_bijective(perm, config):
    e = Hyperedge((0, 1, 2, 3))
    out = apply_permutation(config, e, perm)
    assert len(set(out)) == len(config)
    assert out == tuple(perm[x] for x in config)


def test_generators_and_parsing():
    name, params = parse_generator("torus:d=2,m=4")
    assert name == "torus" and params == {"d": "2", "m": "4"}
    assert parse_generator("cycle:7") == ("cycle", {"n": "7"})
    inst = generate_instance(*parse_generator("torus:d=2,m=4"))
    assert inst.n == 16 and len(inst.edges) == 32
    assert set(inst.degree()) == {4}
    assert len(generate_instance("hypercube", {"d": 3}).edges) == 12
    assert generate_instance("cycle", {"n": 5, "rate": 2.0}).total_rate == 10.0
    rr = generate_instance("random-regular", {"d": 3, "n": 8, "seed": 1})
    assert set(rr.degree()) == {3}
    with pytest.raises(ValueError):
        generate_instance("nope", {})
