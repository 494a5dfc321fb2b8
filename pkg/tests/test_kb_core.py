import itertools
import random
from functools import lru_cache

import pytest
from hypothesis import given, settings

from ccq.certain_answers import enumerate_bounded_models
from ccq.kb_core import (
    INFINITE,
    Atomic,
    Axiom,
    ConceptAssertion,
    Exists,
    Finite,
    KBError,
    Role,
    RoleAssertion,
    UnsatisfiableKB,
    entails,
    entails_concept_inclusion,
    entails_role_inclusion,
    format_kb,
    instance_check,
    is_satisfiable,
    make_kb,
    parse_kb,
    saturate,
    tbox_depth,
)
from gen import core_kbs, random_core_tbox

A, B = Atomic("A"), Atomic("B")
R, S = Role("R"), Role("S")


def test_parse_and_format_round_trip(kact_text):
    kb = parse_kb(kact_text)
    assert kb.dialect == "R"
    assert kb.individuals == ("willis", "monkeys", "stowe", "pitt", "babel")
    assert len(kb.tbox) == 3 and len(kb.abox) == 4
    again = parse_kb(format_kb(kb))
    assert again == kb


def test_parse_recognises_roles_from_usage():
    kb = parse_kb("R <= S\nexists S- <= A\nR(a,b)")
    assert kb.tbox[0] == Axiom(R, S)
    assert kb.tbox[1] == Axiom(Exists(S.inverse()), A)
    assert kb.dialect == "R"


def test_negated_axioms_parse():
    kb = parse_kb("A <= not B\nR <= not S-\nR(a,b)")
    assert kb.tbox[0].negated and kb.tbox[1].negated
    assert kb.tbox[1].rhs == S.inverse()


@pytest.mark.parametrize("text", [
    "A <= exists R\nfoo bar",
    "dialect core\nR <= S\nR(a,b)",
    "dialect weird\nA(a)",
    "R <= A\nR(a,b)",
    "R(a,b)\nR(a)",
])
def test_parse_errors(text):
    with pytest.raises(KBError):
        parse_kb(text)


def test_role_inclusion_rejected_in_core_kb():
    with pytest.raises(KBError):
        make_kb([Axiom(R, S)], [], "core")


def test_dialect_inferred():
    assert make_kb([Axiom(A, B)]).dialect == "core"
    assert make_kb([Axiom(R, S)]).dialect == "R"


def test_saturation_chains():
    t = saturate((Axiom(A, Exists(R)), Axiom(Exists(R), B), Axiom(R, S)))
    assert entails_concept_inclusion(t, A, B)
    assert entails_concept_inclusion(t, A, Exists(S))
    assert entails_concept_inclusion(t, Exists(R.inverse()), Exists(S.inverse()))
    assert not entails_concept_inclusion(t, B, A)
    assert entails_role_inclusion(t, R.inverse(), S.inverse())


def test_disjointness_propagates_and_empties():
    t = saturate((Axiom(A, B), Axiom(B, Atomic("C"), True), Axiom(A, Atomic("C"))))
    assert A in t.empty_concepts
    assert entails_concept_inclusion(t, A, B, negated=True)
    assert entails_concept_inclusion(t, A, Exists(R))  # anything follows from an empty concept
    assert not entails_concept_inclusion(t, B, Atomic("C"))
    assert entails_concept_inclusion(t, Atomic("C"), B, negated=True)


def test_empty_role_from_self_disjointness():
    t = saturate((Axiom(R, R, True),))
    assert R in t.empty_roles and R.inverse() in t.empty_roles
    assert Exists(R) in t.empty_concepts


def test_satisfiability():
    assert is_satisfiable(parse_kb("A <= B\nA(a)"))
    assert not is_satisfiable(parse_kb("A <= not A\nA(a)"))
    assert not is_satisfiable(parse_kb("exists R <= not B\nR(a,b)\nB(a)"))
    assert is_satisfiable(parse_kb("exists R <= not B\nR(a,b)\nB(b)"))
    assert not is_satisfiable(parse_kb("R <= not S\nR(a,b)\nS(a,b)"))
    assert not is_satisfiable(parse_kb("R <= not S-\nR(a,b)\nS(b,a)"))


def test_instance_check(kact_text):
    kb = parse_kb(kact_text)
    assert instance_check(kb, Exists(Role("plays")), "pitt")
    assert instance_check(kb, Exists(Role("leads", True)), "babel")
    assert not instance_check(kb, Exists(Role("leads")), "pitt")
    with pytest.raises(KBError):
        instance_check(kb, A, "nobody")
    with pytest.raises(UnsatisfiableKB):
        instance_check(parse_kb("A <= not A\nA(a)"), A, "a")


@pytest.mark.parametrize("text,depth", [
    ("", Finite(0)),
    ("A <= B", Finite(0)),
    ("A <= exists R", Finite(1)),
    ("A <= exists R\nexists R- <= exists S", Finite(2)),
    ("A <= exists R\nexists R- <= exists R-", Finite(1)),
    ("exists R- <= exists R", INFINITE),
    ("exists R- <= exists S\nexists S- <= exists R", INFINITE),
    ("leads <= plays\nsupports <= plays\nexists supports- <= exists leads-\nplays(w,m)", Finite(1)),
])
def test_tbox_depth(text, depth):
    assert tbox_depth(parse_kb(text).tbox) == depth


# --------------------------------------------------------- brute force

def _basic(concepts, roles):
    out = [Atomic(c) for c in concepts]
    for r in roles:
        out += [Exists(Role(r)), Exists(Role(r, True))]
    return out


@lru_cache(maxsize=None)
def _model_profiles(concepts, roles, max_size):
    """Distinct bitmasks of candidate inclusions satisfied by some interpretation.

    Only basic-concept extensions matter.  A role with domain D and range E
    is realisable iff D and E are both empty or both non-empty (take D x E),
    so the enumeration runs over extensions rather than raw relations.
    """
    bcs = _basic(concepts, roles)
    axioms = [Axiom(b1, b2, neg) for b1 in bcs for b2 in bcs for neg in (False, True)]
    index = {ax: i for i, ax in enumerate(axioms)}
    by_side = [(index[Axiom(b1, b2)], index[Axiom(b1, b2, True)]) for b1 in bcs for b2 in bcs]
    profiles = set()
    for n in range(1, max_size + 1):
        subsets = list(range(1 << n))
        role_options = [(0, 0)] + [(d, e) for d in subsets[1:] for e in subsets[1:]]
        for cs in itertools.product(subsets, repeat=len(concepts)):
            for rs in itertools.product(role_options, repeat=len(roles)):
                ext = list(cs) + [x for pair in rs for x in pair]
                mask = 0
                k = 0
                for left in ext:
                    for right in ext:
                        pos, neg = by_side[k]
                        if left & ~right == 0:
                            mask |= 1 << pos
                        if left & right == 0:
                            mask |= 1 << neg
                        k += 1
                profiles.add(mask)
    return axioms, index, tuple(profiles)


def _brute_entails(tbox, axiom, concepts, roles, max_size):
    axioms, index, profiles = _model_profiles(concepts, roles, max_size)
    need = 0
    for ax in tbox:
        need |= 1 << index[ax]
    bit = 1 << index[axiom]
    return all(p & bit for p in profiles if p & need == need)


@pytest.mark.parametrize("vocab,seed", [((("A", "B"), ("R",), 3), 11), ((("A", "B"), ("R", "S"), 3), 12)])
def test_entailment_matches_brute_force(vocab, seed):
    concepts, roles, size = vocab
    rng = random.Random(seed)
    axioms, _, _ = _model_profiles(concepts, roles, size)
    for _ in range(100):
        tbox = random_core_tbox(rng, 6, concepts, roles, negation=0.2)
        table = saturate(tuple(tbox))
        for ax in axioms:
            assert entails(table, ax) == _brute_entails(tbox, ax, concepts, roles, size), (tbox, ax)


@settings(max_examples=60, deadline=None)
@given(core_kbs(max_axioms=4, negation=0.3))
def test_satisfiable_iff_small_model(kb):
    n = len(kb.individuals) + len(kb.tbox)
    has_model = next(iter(enumerate_bounded_models(kb, n)), None) is not None
    assert has_model == is_satisfiable(kb)


@settings(max_examples=60, deadline=None)
@given(core_kbs())
def test_format_parse_round_trip_random(kb):
    assert parse_kb(format_kb(kb)) == kb
