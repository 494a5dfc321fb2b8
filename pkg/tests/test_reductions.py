import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccq.canonical_model import generate_canonical, is_model
from ccq.certain_answers import (
    SearchConfig,
    Uncertified,
    best_lower_bound,
    countermodel_bounded,
    decide_interval,
    decide_lower,
)
from ccq.query_model import classify, count_cmatches
from ccq.reductions import (
    K4,
    TRIANGLE,
    Graph,
    ReductionError,
    all_3cnfs,
    all_graphs,
    clause_models,
    count_sat,
    dp_expected,
    find_tiling,
    gen_3col_exhaustive,
    gen_3col_rooted,
    gen_cnf_pp,
    gen_dp_pair,
    gen_tiling,
    is_3colorable,
    is_planar,
    tiling_countermodel,
    tiling_exists,
)

EMPTY3 = Graph(("u1", "u2", "u3"), ())


# ----------------------------------------------------------- graph helpers

def test_graph_parsing_and_dedup():
    g = Graph.parse("vertices p q r\np q\nq p  # reversed duplicate\nq r\n")
    assert g.vertices == ("p", "q", "r")
    assert g.edges == (("p", "q"), ("q", "r"))
    with pytest.raises(ReductionError):
        Graph(("a",), (("a", "b"),))
    with pytest.raises(ReductionError):
        Graph.parse("a b c")


def test_graph_enumeration_counts():
    # labelled graphs on 0..4 vertices: 1 + 1 + 2 + 8 + 64
    assert sum(1 for _ in all_graphs(4)) == 76


def test_colorability_and_planarity():
    assert is_3colorable(TRIANGLE) and not is_3colorable(K4)
    assert is_3colorable(EMPTY3)
    assert is_planar(K4) and not is_planar(Graph.complete(5))


# ------------------------------------------------------------- 3-coloring

def test_3col_rooted_instance_shape():
    inst = gen_3col_rooted(TRIANGLE)
    assert classify(inst.query) == {"rooted": True, "exhaustive": False}
    assert inst.kb.dialect == "core" and inst.threshold == 4


@pytest.mark.parametrize("g,certain", [(TRIANGLE, False), (EMPTY3, False), (K4, True)])
def test_3col_rooted_decisions(g, certain):
    inst = gen_3col_rooted(g)
    assert decide_interval(inst.kb, inst.query, (), inst.threshold) is certain
    assert decide_interval(inst.kb, inst.query, (), inst.meta["baseline"])


@pytest.mark.parametrize("g,certain", [(TRIANGLE, False), (K4, True)])
def test_3col_exhaustive_decisions(g, certain):
    inst = gen_3col_exhaustive(g)
    assert classify(inst.query)["exhaustive"] and inst.kb.dialect == "R"
    assert decide_interval(inst.kb, inst.query, (), inst.threshold) is certain


def test_3col_exhaustive_best_bound_on_triangle():
    inst = gen_3col_exhaustive(TRIANGLE)
    assert best_lower_bound(inst.kb, inst.query) == inst.meta["baseline"] == 10


# ------------------------------------------------------------------ DP

def test_dp_expected_table():
    assert dp_expected(TRIANGLE, TRIANGLE) == 27
    assert dp_expected(TRIANGLE, K4) == 36
    assert dp_expected(K4, TRIANGLE) == 48
    assert dp_expected(K4, K4) == 64
    assert dp_expected(K4, K4, "cntd") == 12
    with pytest.raises(ReductionError):
        gen_dp_pair(TRIANGLE, TRIANGLE, "bogus")


def test_dp_rooted_triangles():
    inst = gen_dp_pair(TRIANGLE, TRIANGLE)
    assert best_lower_bound(inst.kb, inst.query) == inst.meta["expected"] == 27


def test_dp_count_mode():
    inst = gen_dp_pair(TRIANGLE, K4, "count")
    assert classify(inst.query)["exhaustive"]
    assert best_lower_bound(inst.kb, inst.query) == inst.meta["expected"] == 36


def test_dp_cntd_has_a_single_counting_variable():
    inst = gen_dp_pair(TRIANGLE, K4, "cntd")
    assert inst.query.counting_vars == ("z",)
    assert not classify(inst.query)["rooted"]


def test_dp_cntd_countermodel_on_triangles():
    inst = gen_dp_pair(TRIANGLE, TRIANGLE, "cntd")
    model = countermodel_bounded(inst.kb, inst.query, (), inst.threshold, len(inst.kb.individuals))
    assert model is not None and is_model(model, inst.kb)
    assert count_cmatches(inst.query, model) == inst.meta["expected"] == 9


# ------------------------------------------------------------------ #SAT

def test_clause_models_and_count_sat():
    assert len(clause_models((1, -2, 3))) == 7
    assert (False, True, False) not in clause_models((1, -2, 3))
    assert count_sat([(1, 2, 3)]) == 7
    assert count_sat([(1, 2, 3), (-1, -2, -3)]) == 6
    with pytest.raises(ReductionError):
        count_sat([(1, 1, 2)])
    with pytest.raises(ReductionError):
        gen_cnf_pp([(1, 2)], 1)


def test_cnf_instance_shape():
    inst = gen_cnf_pp([(1, 2, 3), (-1, 2, -4)], 5)
    assert classify(inst.query) == {"rooted": True, "exhaustive": True}
    assert sum(1 for a in inst.kb.individuals if a.startswith("xi_")) == 14
    assert inst.meta["models"] == count_sat([(1, 2, 3), (-1, 2, -4)])


def test_single_clause_threshold():
    inst = gen_cnf_pp([(1, 2, 3)], 7)
    assert decide_interval(inst.kb, inst.query, (), 7)
    assert not decide_interval(inst.kb, inst.query, (), 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cnf_threshold_matches_model_count(seed):
    rng = random.Random(seed)
    pool = list(all_3cnfs(4, 1))
    cnf = [rng.choice(pool)[0] for _ in range(rng.randint(1, 4))]
    models = count_sat(cnf)
    inst = gen_cnf_pp(cnf, models)
    assert decide_interval(inst.kb, inst.query, (), models)
    assert not decide_interval(inst.kb, inst.query, (), models + 1)


def test_all_3cnfs_enumeration_size():
    # 4 variable triples x 8 sign patterns = 32 clauses
    n = sum(1 for _ in all_3cnfs(4, 3))
    assert n == 32 + 32 * 31 // 2 + 32 * 31 * 30 // 6


# ---------------------------------------------------------------- tiling

TWO = ("w", "k")


def test_tiling_subquery_count():
    h, v = {("w", "k"), ("k", "w")}, {("w", "w"), ("k", "k"), ("w", "k")}
    for n in (1, 2):
        inst = gen_tiling(n, TWO, h, v)
        missing = (4 - len(h)) + (4 - len(v))
        assert inst.meta["adjacency_subqueries"] == n * missing
        assert inst.threshold == 3 and inst.kb.dialect == "R"
    with pytest.raises(ReductionError):
        gen_tiling(0, TWO, h, v)


def test_tiling_canonical_model_size():
    inst = gen_tiling(1, TWO, set(), set())
    can, truncated = generate_canonical(inst.kb, 5)
    # 7 individuals, 2 horizontal-bit children, each with HV, HasBit, HasBit_b and two
    # vertical-bit children, each vertical child with HasBit, HasBit_b and HasCol leaves
    assert not truncated and len(can.domain) == 7 + 2 + 2 * 5 + 4 * 3


def test_find_tiling_brute_force():
    checker = {("w", "k"), ("k", "w")}
    tau = find_tiling(1, TWO, checker, checker)
    assert tau is not None
    assert tau[0, 0] != tau[1, 0] and tau[0, 0] != tau[0, 1]
    assert not tiling_exists(1, TWO, set(), set())


def test_tiling_countermodel_for_valid_tiling():
    checker = {("w", "k"), ("k", "w")}
    for n in (1, 2):
        inst = gen_tiling(n, TWO, checker, checker)
        tau = find_tiling(n, TWO, checker, checker)
        model = tiling_countermodel(inst, n, tau)
        assert is_model(model, inst.kb)
        assert count_cmatches(inst.query, model) == len(TWO)


def test_tiling_countermodel_for_broken_tiling_counts_more():
    checker = {("w", "k"), ("k", "w")}
    inst = gen_tiling(1, TWO, checker, checker)
    tau = {(h, v): "w" for h in range(2) for v in range(2)}
    model = tiling_countermodel(inst, 1, tau)
    assert is_model(model, inst.kb)
    assert count_cmatches(inst.query, model) > inst.threshold


def test_tiling_search_with_tiling_finds_countermodel():
    everything = set(itertools.product(TWO, repeat=2))
    inst = gen_tiling(1, TWO, everything, everything)
    assert not decide_lower(inst.kb, inst.query, (), inst.threshold)


def test_tiling_without_tiling_is_not_certified_by_small_search():
    inst = gen_tiling(1, TWO, set(), set())
    with pytest.raises(Uncertified):
        decide_lower(inst.kb, inst.query, (), inst.threshold, SearchConfig(desk_cap=2, node_limit=300))
