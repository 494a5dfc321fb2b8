import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA

from ccq.circuits import (
    Circuit,
    CircuitError,
    Gate,
    PathCount,
    abox_vocabulary,
    all_aboxes,
    bit_width,
    build_tc0_circuit,
    default_individuals,
    direct_decision,
    encode_input,
    evaluate_circuit,
    pp_closed_form,
    relevant_mappings,
    simulate_pp_paths,
)
from ccq.kb_core import KBError, parse_kb
from ccq.query_model import QueryError, parse_query


@pytest.fixture(scope="module")
def example():
    kb = parse_kb((DATA / "circuit_example.kb").read_text())
    q = parse_query((DATA / "circuit_example.q").read_text())
    return kb, q


@pytest.fixture(scope="module")
def circuit2(example):
    kb, q = example
    return build_tc0_circuit(kb.tbox, q, 2)


def test_example_circuit_shape(circuit2):
    c = circuit2
    assert c.meta["bits"] == 3
    assert c.meta["mappings"] == 6
    assert c.depth() == 7
    assert len(c.gates) == 48
    assert [g.label.split(":")[0] for g in c.gates.values() if g.kind == "threshold"] == [
        "T0", "T1", "T2", "T3", "T4"]
    assert c.individuals == ("a", "b")


def test_example_circuit_agrees_on_every_abox(example, circuit2):
    kb, q = example
    cases = 0
    for abox in all_aboxes(circuit2):
        for tup in (("a",), ("b",)):
            for m in range(8):
                got = evaluate_circuit(circuit2, encode_input(circuit2, abox, tup, m))
                assert got == direct_decision(kb.tbox, q, ("a", "b"), abox, tup, m), (abox, tup, m)
                cases += 1
    assert cases == 1024


def test_random_three_individual_aboxes(example):
    kb, q = example
    c = build_tc0_circuit(kb.tbox, q, 3)
    assert c.depth() <= 7
    rng = random.Random(7)
    facts = abox_vocabulary(c)
    assert len(facts) == 9 + 3
    for _ in range(200):
        abox = [f for f in facts if rng.random() < 0.3]
        tup = (rng.choice(c.individuals),)
        m = rng.randint(0, 2 ** c.meta["bits"] - 1)
        assert evaluate_circuit(c, encode_input(c, abox, tup, m)) == direct_decision(
            kb.tbox, q, c.individuals, abox, tup, m)


def test_dump_round_trip_and_dot(circuit2):
    text = circuit2.dumps()
    again = Circuit.loads(text)
    assert again.dumps() == text
    assert again.depth() == circuit2.depth()
    abox = parse_kb("R(a,b)").abox
    for m in range(4):
        assert evaluate_circuit(again, encode_input(again, abox, ("a",), m)) == evaluate_circuit(
            circuit2, encode_input(circuit2, abox, ("a",), m))
    dot = circuit2.to_dot()
    edges = [l for l in dot.splitlines() if l.strip().startswith('"') and '" -> "' in l]
    assert dot.startswith("digraph circuit {")
    assert len(edges) == sum(len(g.inputs) for g in circuit2.gates.values())


def test_loads_rejects_tampering(circuit2):
    lines = circuit2.dumps().splitlines()
    victim = next(i for i, l in enumerate(lines) if " and " in l)
    lines[victim] = lines[victim].replace("and:", "and:X", 1)
    with pytest.raises(CircuitError):
        Circuit.loads("\n".join(lines))
    with pytest.raises(CircuitError):
        Circuit.loads("# individuals a\n")


def test_encode_input_validation(circuit2):
    with pytest.raises(CircuitError):
        encode_input(circuit2, [], ("a",), 8)
    with pytest.raises(CircuitError):
        encode_input(circuit2, [], (), 1)
    with pytest.raises(CircuitError):
        encode_input(circuit2, parse_kb("R(a,zz)").abox, ("a",), 1)
    with pytest.raises(CircuitError):
        encode_input(circuit2, parse_kb("Other(a)").abox, ("a",), 1)


def test_gate_invariants():
    with pytest.raises(CircuitError):
        Gate("x", "xor")
    with pytest.raises(CircuitError):
        Gate("x", "not", ("a", "b"))
    with pytest.raises(CircuitError):
        Gate("x", "threshold", ("a",))


def test_construction_preconditions(example):
    kb, q = example
    with pytest.raises(KBError):
        build_tc0_circuit(parse_kb("R <= S\nR(a,b)").tbox, q, 2)
    with pytest.raises(QueryError):
        build_tc0_circuit(kb.tbox, parse_query("q() := exists y ; count z ; R(a,y) , R(y,z)"), 2)
    with pytest.raises(CircuitError):
        build_tc0_circuit(kb.tbox, q, 2, individuals=("a",))


def test_default_individual_names():
    assert default_individuals(3) == ("a", "b", "c")
    assert default_individuals(28)[26:] == ("aa", "ab")


def test_bit_width_covers_threshold_range():
    for ell in range(1, 4):
        for t in range(0, 4):
            for s in range(1, 4):
                k = (ell + t) ** s
                assert 2 ** bit_width(ell, t, s) > k


def test_relevant_mappings_of_example(example):
    kb, q = example
    maps = relevant_mappings(kb.tbox, q, ("a", "b"))
    assert len(maps) == 6
    assert all(mu["x"][1] == () for mu in maps)


def test_pp_simulation_matches_closed_form(example):
    kb, q = example
    got = simulate_pp_paths(kb, q, ("a",), 1)
    assert got == PathCount(20, 32, 2)
    assert got == pp_closed_form(1, 1, 4)
    assert got.majority()


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 64).flatmap(lambda c: st.tuples(st.just(c), st.integers(0, c), st.integers(1, c))))
def test_pp_majority_iff_threshold(args):
    c, n_c, m = args
    assert pp_closed_form(n_c, m, c).majority() == (n_c >= m)


def test_pp_closed_form_validation():
    with pytest.raises(ValueError):
        pp_closed_form(0, 1, 0)
    with pytest.raises(ValueError):
        pp_closed_form(5, 1, 4)
    with pytest.raises(ValueError):
        pp_closed_form(1, 0, 4)
    with pytest.raises(ValueError):
        PathCount(3, 2, 1)
