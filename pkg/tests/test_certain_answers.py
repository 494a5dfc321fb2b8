import itertools
import random

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ccq.canonical_model import generate_canonical, is_model
from ccq.certain_answers import (
    INF,
    AnswerInterval,
    Copy,
    SearchConfig,
    Uncertified,
    best_lower_bound,
    build_interleaving,
    build_modified_interleaving,
    build_reduced_interleaving,
    certain_cq,
    countermodel_bounded,
    decide_interval,
    decide_lower,
    enumerate_bounded_models,
    exhaustive_rooted_core_lower,
    min_cmatches_bounded,
    minimal_model_bounded,
    reduced_class_bound_holds,
    star_set,
    upper_bound,
)
from ccq.kb_core import Finite, KBError, UnsatisfiableKB, is_satisfiable, make_kb, parse_kb, tbox_depth
from ccq.query_model import QueryError, count_cmatches, parse_query
from gen import perturb_model, random_core_kb, random_query_from_model


@pytest.fixture
def kact(kact_text):
    return parse_kb(kact_text)


@pytest.fixture
def queries(data_dir, kact):
    return {n: parse_query((data_dir / f"{n}.q").read_text(), kact.individuals) for n in ("q1", "q2", "q3")}


def test_interval_formatting_and_validation():
    assert str(AnswerInterval(2)) == "[2, inf]"
    assert str(AnswerInterval(0, 1)) == "[0, 1]"
    with pytest.raises(ValueError):
        AnswerInterval(3, 1)


def test_kact_decisions(kact, queries):
    q1, q2, q3 = queries["q1"], queries["q2"], queries["q3"]
    assert decide_interval(kact, q1, (), 2)
    assert not decide_interval(kact, q1, (), 3)
    assert decide_interval(kact, q2, ("monkeys",), 2)
    assert not decide_interval(kact, q2, ("monkeys",), 3)
    assert decide_interval(kact, q3, (), 3)
    assert not decide_interval(kact, q3, (), 5)


def test_kact_best_bounds(kact, queries):
    assert best_lower_bound(kact, queries["q1"]) == 2
    assert best_lower_bound(kact, queries["q2"], ("monkeys",)) == 2
    assert best_lower_bound(kact, queries["q2"], ("babel",)) == 1
    assert best_lower_bound(kact, queries["q3"]) == 3


def test_kact_countermodel_for_q3(kact, queries):
    model = countermodel_bounded(kact, queries["q3"], (), 4, len(kact.individuals) + 2)
    assert model is not None and is_model(model, kact)
    assert count_cmatches(queries["q3"], model) == 3


def test_upper_bounds(kact, queries):
    assert upper_bound(kact, queries["q2"], ("monkeys",)) == INF
    lonely = make_kb(kact.tbox, kact.abox, kact.dialect, kact.individuals + ("nobody",))
    assert upper_bound(lonely, queries["q2"], ("nobody",)) == 0
    boolean = parse_query("b() := exists y ; plays(pitt,y)", kact.individuals)
    assert upper_bound(kact, boolean) == 1
    assert decide_interval(kact, boolean, (), 1, 1)
    assert not decide_interval(kact, queries["q2"], ("monkeys",), 2, 5)


def test_certain_cq(kact):
    assert certain_cq(kact, parse_query("c() := exists y ; leads(y,babel)"))
    assert not certain_cq(kact, parse_query("c() := exists y ; leads(pitt,y)"))
    assert certain_cq(kact, parse_query("c() := exists y ; plays(y,babel)"))


def test_certain_cq_infinite_depth_rooted():
    kb = parse_kb("A <= exists R\nexists R- <= exists R\nA(a)")
    q = parse_query("c() := exists y1,y2,y3 ; R(a,y1) , R(y1,y2) , R(y2,y3)")
    assert certain_cq(kb, q)
    assert not certain_cq(kb, parse_query("c() := exists y ; R(y,a)"))


def test_query_constant_outside_kb_is_isolated(kact):
    q = parse_query("c() := count z ; plays(stranger,z)")
    assert not certain_cq(kact, q)
    assert best_lower_bound(kact, q) == 0


def test_errors(kact, queries):
    with pytest.raises(UnsatisfiableKB):
        decide_interval(parse_kb("A <= not A\nA(a)"), parse_query("q() := count z ; A(z)"), (), 1)
    with pytest.raises(QueryError):
        decide_interval(kact, queries["q2"], (), 1)
    with pytest.raises(KBError):
        decide_interval(kact, queries["q2"], ("nobody",), 1)
    with pytest.raises(KBError):
        exhaustive_rooted_core_lower(kact, queries["q2"], ("monkeys",))


def test_countermodel_needs_no_certification():
    kb = parse_kb("A <= exists R\nexists R- <= exists R\nA(a)")
    assert not decide_lower(kb, parse_query("q() := count z ; R(z,z)"), (), 1)


def test_uncertified_beyond_the_cap():
    kb = parse_kb("A <= exists R\nexists R- <= exists R\nA(a)")
    q = parse_query("q() := exists y ; count z ; R(a,y) , R(y,z)")
    with pytest.raises(Uncertified):
        decide_lower(kb, q, (), 1, SearchConfig(desk_cap=2))


def test_node_limit_reports_uncertified(kact, queries):
    with pytest.raises(Uncertified):
        best_lower_bound(kact, queries["q1"], (), SearchConfig(node_limit=1))


def test_minimal_model_is_a_model(kact, queries):
    c, model = minimal_model_bounded(kact, queries["q1"], (), len(kact.individuals) + 2)
    assert c == 2 and is_model(model, kact)


def test_zero_or_negative_lower_always_holds(kact, queries):
    assert decide_lower(kact, queries["q1"], (), 0)
    assert decide_lower(kact, queries["q1"], (), -3)


def test_bounded_models_are_models_and_use_fresh_elements_in_order():
    kb = parse_kb("A <= exists R\nA(a)")
    models = list(enumerate_bounded_models(kb, 3))
    assert models and all(is_model(m, kb) for m in models)
    for m in models:
        fresh = [e for e in m.domain if str(e).startswith("_e")]
        assert fresh == [f"_e{i}" for i in range(1, len(fresh) + 1)]


def test_unsatisfiable_kb_has_no_bounded_models():
    assert list(enumerate_bounded_models(parse_kb("A <= not A\nA(a)"), 3)) == []


# ----------------------------------------------------------- random checks

def _random_rooted_instance(rng, exhaustive=True):
    while True:
        kb = random_core_kb(rng)
        if not is_satisfiable(kb):
            continue
        can, _ = generate_canonical(kb, 3)
        res = random_query_from_model(rng, can, exhaustive=exhaustive)
        if res is not None:
            return kb, res[0], res[1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_branch_and_bound_matches_full_enumeration(seed):
    rng = random.Random(seed)
    kb, q, tup = _random_rooted_instance(rng, exhaustive=rng.random() < 0.5)
    cap = len(kb.individuals) + 2
    literal = min(count_cmatches(q, m, tup) for m in enumerate_bounded_models(kb, cap))
    assert min_cmatches_bounded(kb, q, tup, cap) == literal


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decide_interval_is_monotone(seed):
    rng = random.Random(seed)
    kb, q, tup = _random_rooted_instance(rng)
    m = rng.randint(0, 3)
    if decide_interval(kb, q, tup, m):
        assert all(decide_interval(kb, q, tup, k) for k in range(m + 1))
    else:
        assert not decide_interval(kb, q, tup, m + 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_best_bound_agrees_with_decisions(seed):
    rng = random.Random(seed)
    kb, q, tup = _random_rooted_instance(rng, exhaustive=rng.random() < 0.5)
    assume(isinstance(tbox_depth(kb.tbox), Finite))
    try:
        best = best_lower_bound(kb, q, tup)
    except Uncertified:
        return
    assert decide_lower(kb, q, tup, best)
    assert not decide_lower(kb, q, tup, best + 1)


def _finite_triple(rng):
    while True:
        kb, q, tup = _random_rooted_instance(rng, exhaustive=rng.random() < 0.5)
        if not isinstance(tbox_depth(kb.tbox), Finite):
            continue
        models = list(itertools.islice(enumerate_bounded_models(kb, len(kb.individuals) + 3), 200))
        return kb, q, tup, perturb_model(rng, rng.choice(models), kb)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_interleaving_properties(seed):
    rng = random.Random(seed)
    kb, q, tup, model = _finite_triple(rng)
    inter = build_interleaving(model, kb, q, tup)
    star = star_set(model, q, tup)
    assert inter.star == star
    assert all(e in star or isinstance(e, Copy) for e in inter.model.domain)
    assert inter.is_model and inter.cmatch_count <= count_cmatches(q, model, tup)
    reduced = build_reduced_interleaving(inter, kb, q, tup)
    assert reduced.is_model and reduced.cmatch_count <= inter.cmatch_count
    assert reduced.info["bound_holds"]
    assert reduced.summary() == f"reduced {reduced.cmatch_count}"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_modified_interleaving_for_exhaustive_rooted(seed):
    rng = random.Random(seed)
    while True:
        kb, q, tup, model = _finite_triple(rng)
        if not q.existential_vars:
            break
    mod = build_modified_interleaving(model, kb, q, tup)
    assert mod.is_model
    assert mod.cmatch_count <= count_cmatches(q, model, tup)
    assert mod.cmatch_count >= exhaustive_rooted_core_lower(kb, q, tup)


def test_reduced_class_bound_formula():
    assert reduced_class_bound_holds(0, 0, 1, 1)
    assert not reduced_class_bound_holds(1, 0, 1, 1)
    # (2*1+3) * 1^(1+2) * (1+1)^(1^5) = 10
    assert reduced_class_bound_holds(10, 1, 1, 1)
    assert not reduced_class_bound_holds(11, 1, 1, 1)
    assert reduced_class_bound_holds(10**6, 3, 3, 2)


def test_report_dump_has_summary_line(kact, queries):
    _, model = minimal_model_bounded(kact, queries["q3"], (), len(kact.individuals) + 2)
    rep = build_interleaving(model, kact, queries["q3"])
    assert rep.dump().endswith(f"interleaving {rep.cmatch_count}\n")
