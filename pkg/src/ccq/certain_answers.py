"""Certain answer intervals, best lower bounds, and countermodel constructions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from .canonical_model import (
    DomainElement,
    FiniteInterpretation,
    Homomorphism,
    HomomorphismError,
    canonical_restricted,
    find_homomorphism,
    generate_canonical,
    is_homomorphism,
    is_model,
    satisfies_star,
)
from .kb_core import (
    Atomic,
    ConceptAssertion,
    Exists,
    Finite,
    KBError,
    KnowledgeBase,
    Role,
    RoleAssertion,
    make_kb,
    require_satisfiable,
    tbox_depth,
)
from .query_model import (
    CountingQuery,
    QueryError,
    as_cq,
    classify,
    count_cmatches,
    enumerate_matches,
)

INF = math.inf


class Uncertified(RuntimeError):
    """The answer cannot be certified within the configured search scale."""


@dataclass(frozen=True)
class SearchConfig:
    desk_cap: int = 8  # extra domain elements beyond the individuals
    depth: int | None = None  # override for canonical-model truncation
    node_limit: int | None = 400_000  # scored search states before giving up


DEFAULT_CONFIG = SearchConfig()


@dataclass(frozen=True)
class AnswerInterval:
    lower: int
    upper: float | int = INF

    def __post_init__(self):
        if self.lower < 0 or self.lower > self.upper:
            raise ValueError(f"bad interval [{self.lower}, {self.upper}]")

    def __str__(self):
        up = "inf" if self.upper == INF else str(self.upper)
        return f"[{self.lower}, {up}]"


def _check_tuple(kb: KnowledgeBase, q: CountingQuery, tup) -> tuple:
    tup = tuple(tup)
    if len(tup) != len(q.answer_vars):
        raise QueryError(f"expected {len(q.answer_vars)} answer individuals, got {len(tup)}")
    for a in tup:
        if a not in kb.individuals:
            raise KBError(f"unknown individual {a!r}")
    return tup


def _with_query_constants(kb: KnowledgeBase, q: CountingQuery) -> KnowledgeBase:
    """Query constants absent from the KB become isolated individuals."""
    missing = [c for c in q.constants() if c not in kb.individuals]
    if not missing:
        return kb
    return KnowledgeBase(kb.tbox, kb.abox, kb.dialect, tuple(kb.individuals) + tuple(missing))


# --------------------------------------------------------------- plain CQs

def _cq_depth(kb: KnowledgeBase, q: CountingQuery, config: SearchConfig):
    """(depth, complete) for deciding CQ entailment on a truncated Can(K)."""
    if config.depth is not None:
        return config.depth, False
    d = tbox_depth(kb.tbox)
    if isinstance(d, Finite):
        return d.n, True
    if classify(q)["rooted"]:
        return len(q), True
    return len(q) + len(kb.tbox), False


def certain_cq(kb: KnowledgeBase, q: CountingQuery, tup=(), config: SearchConfig = DEFAULT_CONFIG) -> bool:
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    depth, complete = _cq_depth(kb, q, config)
    can, truncated = generate_canonical(kb, depth)
    if enumerate_matches(as_cq(q), can, tup):
        return True
    if truncated and not complete:
        raise Uncertified(f"no match within canonical depth {depth}; TBox has infinite depth")
    return False


def upper_bound(kb: KnowledgeBase, q: CountingQuery, tup=(), config: SearchConfig = DEFAULT_CONFIG):
    """0, 1, or inf: the least certain upper bound on the c-match count."""
    if not certain_cq(kb, q, tup, config):
        return 0
    return 1 if not q.counting_vars else INF


# ----------------------------------------------- exhaustive rooted queries

def is_exhaustive_rooted(q: CountingQuery) -> bool:
    c = classify(q)
    return c["rooted"] and c["exhaustive"]


def exhaustive_rooted_core_lower(kb: KnowledgeBase, q: CountingQuery, tup=()) -> int:
    if kb.dialect != "core":
        raise KBError("requires a DL-Lite_core knowledge base")
    if not is_exhaustive_rooted(q):
        raise QueryError("requires an exhaustive rooted query")
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    return count_cmatches(q, canonical_restricted(kb, q), tup)


# --------------------------------------------------- bounded model search

class _Chase:
    """Witness-choice chase over a bounded domain.

    States hold positive facts closed under the TBox; every open existential
    requirement is resolved by branching over the target element.  Fresh
    elements are introduced in index order only.
    """

    def __init__(self, kb: KnowledgeBase, size: int, prefix: str = "_e"):
        self.kb = kb
        self.table = kb.entailments
        inds = list(kb.individuals) or ["_root"]
        self.inds = inds
        if size < len(inds):
            raise ValueError(f"domain size {size} below the {len(inds)} individuals")
        fresh = []
        k = 1
        while len(fresh) < size - len(inds):
            name = f"{prefix}{k}"
            if name not in inds:
                fresh.append(name)
            k += 1
        self.fresh = fresh
        voc = kb.vocabulary
        self.concept_names = tuple(voc.concepts)
        self.role_names = tuple(voc.roles)

    # state = (types: dict elem -> frozenset, edges: frozenset of (name, x, y))
    def initial(self):
        types = {a: frozenset() for a in self.inds}
        edges = set()
        ok = True
        for ax in self.kb.abox:
            if isinstance(ax, ConceptAssertion):
                ok &= self._add_concept(types, ax.individual, Atomic(ax.concept))
            else:
                ok &= self._add_edge(types, edges, Role(ax.role), ax.subject, ax.object)
        if not ok:
            return None
        return types, edges

    def _add_concept(self, types, x, b) -> bool:
        cur = types.get(x, frozenset())
        new = cur | self.table.supers(b)
        if new == cur:
            return True
        t = self.table
        if new & t.empty_concepts:
            return False
        for c in new - cur:
            for d in new:
                if (c, d) in t.disjoint_concepts:
                    return False
        types[x] = new
        return True

    def _add_edge(self, types, edges, r: Role, x, y) -> bool:
        for s in self.table.role_supers(r):
            fact = (s.name, y, x) if s.inverted else (s.name, x, y)
            edges.add(fact)
            if not self._add_concept(types, x, Exists(s)):
                return False
            if not self._add_concept(types, y, Exists(s.inverse())):
                return False
        return self._pair_ok(edges, x, y)

    def _pair_ok(self, edges, x, y) -> bool:
        t = self.table
        if not t.disjoint_roles:
            return True
        held = set()
        for p in self.role_names:
            if (p, x, y) in edges:
                held.add(Role(p))
            if (p, y, x) in edges:
                held.add(Role(p, True))
        for r in held:
            for s in held:
                if (r, s) in t.disjoint_roles:
                    return False
        return True

    def open_requirement(self, types, edges):
        for x in list(types):
            for b in sorted(types[x], key=str):
                if not isinstance(b, Exists):
                    continue
                r = b.role
                if r.inverted:
                    if not any(f[0] == r.name and f[2] == x for f in edges):
                        return x, r
                elif not any(f[0] == r.name and f[1] == x for f in edges):
                    return x, r
        return None

    def targets(self, types):
        used = [e for e in self.inds] + [e for e in self.fresh if e in types]
        nxt = next((e for e in self.fresh if e not in types), None)
        return used + ([nxt] if nxt is not None else [])

    def expand(self, state, x, r):
        types, edges = state
        for t in self.targets(types):
            ty = dict(types)
            ty.setdefault(t, frozenset())
            ed = set(edges)
            if self._add_edge(ty, ed, r, x, t):
                yield ty, ed

    def to_interpretation(self, state) -> FiniteInterpretation:
        types, edges = state
        domain = [e for e in self.inds] + [e for e in self.fresh if e in types]
        concepts = {a: set() for a in self.concept_names}
        for e, ts in types.items():
            for b in ts:
                if isinstance(b, Atomic):
                    concepts.setdefault(b.name, set()).add(e)
        roles = {p: set() for p in self.role_names}
        for p, x, y in edges:
            roles.setdefault(p, set()).add((x, y))
        return FiniteInterpretation(domain, concepts, roles, {a: a for a in self.kb.individuals})


def enumerate_bounded_models(kb: KnowledgeBase, n: int) -> Iterator[FiniteInterpretation]:
    """Chase-leaf models with at most ``n`` elements that fix the individuals.

    Every model of ``kb`` over at most ``n`` elements contains (up to renaming
    of anonymous elements) one of the yielded models, so minima of monotone
    measures over the stream equal minima over all such models.
    """
    from .kb_core import is_satisfiable

    if not is_satisfiable(kb):
        return
    chase = _Chase(kb, n)
    init = chase.initial()
    if init is None:
        return
    stack = [init]
    while stack:
        state = stack.pop()
        req = chase.open_requirement(*state)
        if req is None:
            yield chase.to_interpretation(state)
            continue
        stack.extend(reversed(list(chase.expand(state, *req))))


def _search_min(kb: KnowledgeBase, q: CountingQuery, tup, n: int, best: int | None = None,
                stop_below: int | None = None, node_limit: int | None = None):
    """Branch-and-bound minimum of the c-match count over bounded models.

    Returns (count, model) for the best model found with count < ``best``,
    or (None, None).  ``stop_below`` ends the search at the first model with
    a count below it.
    """
    chase = _Chase(kb, n)
    init = chase.initial()
    if init is None:
        return None, None
    found = (None, None)

    scored = 0

    def score(state):
        nonlocal scored
        scored += 1
        if node_limit is not None and scored > node_limit:
            raise Uncertified(f"model search exceeded {node_limit} states")
        return count_cmatches(q, chase.to_interpretation(state), tup)

    stack = [(score(init), init)]
    while stack:
        c, state = stack.pop()
        if best is not None and c >= best:
            continue
        req = chase.open_requirement(*state)
        if req is None:
            best = c
            found = (c, chase.to_interpretation(state))
            if stop_below is not None and c < stop_below:
                return found
            if c == 0:
                return found
            continue
        # best-first: the lowest partial count is popped next
        children = [(score(ch), i, ch) for i, ch in enumerate(chase.expand(state, *req))]
        children.sort(key=lambda t: (-t[0], -t[1]))
        stack.extend((sc, ch) for sc, _, ch in children if best is None or sc < best)
    return found


def min_cmatches_bounded(kb: KnowledgeBase, q: CountingQuery, tup=(), n: int | None = None) -> int:
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    if n is None:
        n = len(kb.individuals)
    c, _ = _search_min(kb, q, tup, n)
    if c is None:
        raise Uncertified(f"no model with at most {n} elements")
    return c


def minimal_model_bounded(kb: KnowledgeBase, q: CountingQuery, tup=(), n: int | None = None,
                          node_limit: int | None = None):
    """(count, model) for a bounded model minimising the c-match count."""
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    if n is None:
        n = len(kb.individuals)
    c, model = _search_min(kb, q, tup, n, node_limit=node_limit)
    if c is None:
        raise Uncertified(f"no model with at most {n} elements")
    return c, model


def countermodel_bounded(kb: KnowledgeBase, q: CountingQuery, tup, m: int, n: int,
                         node_limit: int | None = None):
    """A bounded model with fewer than ``m`` c-matches, or None."""
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    c, model = _search_min(kb, q, tup, n, best=m, stop_below=m, node_limit=node_limit)
    return model


# ----------------------------------------------------------- dispatching

def _certified_size(kb: KnowledgeBase, q: CountingQuery, config: SearchConfig):
    """Domain size at which bounded search is exact, or None beyond the cap."""
    d = tbox_depth(kb.tbox)
    if not isinstance(d, Finite):
        return None
    can, _ = generate_canonical(kb, d.n)
    size = max(len(can.domain), 1)
    if size > len(kb.individuals) + config.desk_cap:
        return None
    return size


def best_lower_bound(kb: KnowledgeBase, q: CountingQuery, tup=(), config: SearchConfig = DEFAULT_CONFIG) -> int:
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    if kb.dialect == "core" and is_exhaustive_rooted(q):
        return exhaustive_rooted_core_lower(kb, q, tup)
    size = _certified_size(kb, q, config)
    if size is not None:
        can = generate_canonical(kb, tbox_depth(kb.tbox).n)[0]
        start = count_cmatches(q, can, tup)
        c, _ = _search_min(kb, q, tup, size, best=start, node_limit=config.node_limit)
        return start if c is None else c
    if not certain_cq(kb, q, tup, config):
        return 0
    raise Uncertified("best lower bound not certified at this scale")


def decide_lower(kb: KnowledgeBase, q: CountingQuery, tup, m: int, config: SearchConfig = DEFAULT_CONFIG) -> bool:
    """Does every model have at least ``m`` c-matches of q(tup)?"""
    if m <= 0:
        return True
    require_satisfiable(kb)
    kb = _with_query_constants(kb, q)
    tup = _check_tuple(kb, q, tup)
    if kb.dialect == "core" and is_exhaustive_rooted(q):
        return exhaustive_rooted_core_lower(kb, q, tup) >= m
    size = _certified_size(kb, q, config)
    if size is not None:
        return countermodel_bounded(kb, q, tup, m, size, config.node_limit) is None
    if countermodel_bounded(kb, q, tup, m, len(kb.individuals) + config.desk_cap, config.node_limit) is not None:
        return False
    if not certain_cq(kb, q, tup, config):
        return False
    raise Uncertified(f"bound {m} not certified at this scale")


def decide_interval(kb: KnowledgeBase, q: CountingQuery, tup=(), m: int = 0, M=INF,
                    config: SearchConfig = DEFAULT_CONFIG) -> bool:
    require_satisfiable(kb)
    if M != INF and M < upper_bound(kb, q, tup, config):
        return False
    return decide_lower(kb, q, tup, m, config)


# ----------------------------------------------------- model surgery

@dataclass
class CounterModelReport:
    model: FiniteInterpretation
    cmatch_count: int
    construction: str
    is_model: bool
    star: frozenset = frozenset()
    info: dict = field(default_factory=dict)

    def summary(self) -> str:
        return f"{self.construction} {self.cmatch_count}"

    def dump(self) -> str:
        return self.model.dump() + self.summary() + "\n"


@dataclass(frozen=True)
class Copy:
    """An element of the canonical model kept outside the star set."""
    element: DomainElement

    def __str__(self):
        return f"~{self.element}"


@dataclass(frozen=True)
class Hang:
    """A fresh element anchored at a star-set element, reached by a role word."""
    anchor: object
    word: tuple

    def __str__(self):
        return ".".join([str(self.anchor)] + [str(r) for r in self.word])


def star_set(model: FiniteInterpretation, q: CountingQuery, tup=()) -> frozenset:
    """Individual images plus every element used by a counting variable of a match."""
    star = set(model.individuals.values())
    for m in enumerate_matches(q, model, tup):
        star.update(m.restrict(q.counting_vars))
    return frozenset(star)


def _canonical_for(kb: KnowledgeBase, q: CountingQuery, depth: int | None):
    if depth is None:
        d = tbox_depth(kb.tbox)
        depth = d.n if isinstance(d, Finite) else 2 * len(q) + 4
    return generate_canonical(kb, depth)


def build_interleaving(model: FiniteInterpretation, kb: KnowledgeBase, q: CountingQuery, tup=(),
                       f: Homomorphism | None = None, depth: int | None = None) -> CounterModelReport:
    if f is None:
        can, truncated = _canonical_for(kb, q, depth)
        f = find_homomorphism(can, model)
    else:
        can, truncated = f.source, None
    if not is_homomorphism(f.mapping, f.source, model):
        raise HomomorphismError("supplied map is not a homomorphism into the model")
    star = star_set(model, q, tup)
    fp = {d: (f.mapping[d] if f.mapping[d] in star else Copy(d)) for d in can.domain}
    inter = can.image(fp)
    report = CounterModelReport(
        inter, count_cmatches(q, inter, tup), "interleaving", is_model(inter, kb), star,
        {"map": fp, "canonical": can, "truncated": truncated, "original_count": count_cmatches(q, model, tup)},
    )
    return report


@dataclass(frozen=True)
class NeighborhoodProfile:
    root_prefix: DomainElement
    self_word: tuple
    chi: tuple  # sorted (word, star element) pairs
    depth_class: int


def neighborhood_profile(d: DomainElement, fp: dict, star: frozenset, n: int, modulus: int,
                         can_index: dict) -> NeighborhoodProfile:
    cur, steps = d, 0
    while steps < n and not cur.is_individual and fp[cur] not in star:
        cur = cur.parent()
        steps += 1
    word = d.suffix[cur.depth:]
    chi = []
    for u in can_index.get(cur, ()):
        w = u.suffix[cur.depth:]
        if len(w) <= 2 * n and fp[u] in star:
            chi.append((w, fp[u]))
    chi.sort(key=lambda p: (len(p[0]), str(p[0]), str(p[1])))
    return NeighborhoodProfile(cur, word, tuple(chi), d.depth % modulus)


def _subtree_index(can: FiniteInterpretation) -> dict:
    """element -> list of itself and its descendants."""
    idx: dict = {}
    for u in can.domain:
        cur = u
        while True:
            idx.setdefault(cur, []).append(u)
            if cur.is_individual:
                break
            cur = cur.parent()
    return idx


def reduced_class_bound_holds(classes: int, tbox_size: int, query_size: int, star_size: int) -> bool:
    """classes <= (2|q|+3) * |T|^(|q|+2) * (|star|+1)^(|T|^(2|q|+3))."""
    if classes == 0:
        return True
    if tbox_size == 0:
        return False
    base = 2 * query_size + 3
    inner = tbox_size ** (2 * query_size + 3)
    if inner < 4096:
        return classes <= base * tbox_size ** (query_size + 2) * (star_size + 1) ** inner
    # the exact bound has thousands of digits; compare logarithms instead
    rhs = math.log(base) + (query_size + 2) * math.log(tbox_size) + float(inner) * math.log(star_size + 1)
    return math.log(classes) <= rhs


def build_reduced_interleaving(inter: CounterModelReport, kb: KnowledgeBase, q: CountingQuery,
                               tup=()) -> CounterModelReport:
    fp = inter.info["map"]
    can = inter.info["canonical"]
    star = inter.star
    n = len(q) + 1
    modulus = 2 * len(q) + 3
    index = _subtree_index(can)
    cls: dict = {}
    profiles = {}
    for d in can.domain:
        e = fp[d]
        if e in star:
            cls[e] = ("star", e)
            continue
        if not isinstance(e, Copy):
            raise HomomorphismError(f"element {e} outside the tree part")
        p = neighborhood_profile(d, fp, star, n, modulus, index)
        profiles[e] = p
        cls[e] = ("tree", p.self_word, p.chi, p.depth_class)
    names: dict = {}
    for key in dict.fromkeys(cls[e] for e in inter.model.domain):
        if key[0] == "star":
            names[key] = key[1]
        else:
            names[key] = f"[{len(names)}]"
    g = {e: names[cls[e]] for e in inter.model.domain}
    reduced = inter.model.image(g)
    n_classes = sum(1 for k in names if k[0] == "tree")
    bound_ok = reduced_class_bound_holds(n_classes, len(kb.tbox), len(q), len(star))
    return CounterModelReport(
        reduced, count_cmatches(q, reduced, tup), "reduced", is_model(reduced, kb), star,
        {"classes": n_classes, "bound_holds": bound_ok, "profiles": profiles, "quotient": g},
    )


def build_modified_interleaving(model: FiniteInterpretation, kb: KnowledgeBase, q: CountingQuery, tup=(),
                                f: Homomorphism | None = None, depth: int | None = None) -> CounterModelReport:
    if not is_exhaustive_rooted(q):
        raise QueryError("modified interleaving needs an exhaustive rooted query")
    if f is None:
        from .canonical_model import normalize_homomorphism

        can, _ = _canonical_for(kb, q, depth)
        f = normalize_homomorphism(find_homomorphism(can, model))
    if not satisfies_star(f):
        raise HomomorphismError("homomorphism does not satisfy the copy property")
    can = f.source
    star = star_set(model, q, tup)
    fs: dict = {}
    for d in can.domain:  # parents precede children in domain order
        if d.is_individual:
            fs[d] = f.mapping[d]
            continue
        up = fs[d.parent()]
        r = d.suffix[-1]
        if up in star and f.mapping[d] in star:
            fs[d] = f.mapping[d]
        elif isinstance(up, Hang):
            fs[d] = Hang(up.anchor, up.word + (r,))
        else:
            fs[d] = Hang(up, (r,))
    result = can.image(fs)
    return CounterModelReport(
        result, count_cmatches(q, result, tup), "modified", is_model(result, kb), star,
        {"map": fs, "coincides": _coincides_with_star_canonical(result, kb)},
    )


def star_abox(interp: FiniteInterpretation):
    """Facts of ``interp`` among its non-fresh elements, as a string-named ABox."""
    keep = [e for e in interp.domain if not isinstance(e, Hang)]
    keep_set = set(keep)
    abox = []
    for a, s in interp.concepts.items():
        for e in s:
            if e in keep_set:
                abox.append(ConceptAssertion(a, str(e)))
    for p, s in interp.roles.items():
        for x, y in s:
            if x in keep_set and y in keep_set:
                abox.append(RoleAssertion(p, str(x), str(y)))
    abox.sort(key=str)
    return abox, [str(e) for e in keep]


def _coincides_with_star_canonical(interp: FiniteInterpretation, kb: KnowledgeBase) -> bool:
    abox, names = star_abox(interp)
    if len(set(names)) != len(names):
        return False
    star_kb = make_kb(kb.tbox, abox, kb.dialect, names)
    d = tbox_depth(kb.tbox)
    depth = d.n if isinstance(d, Finite) else max((len(e.word) for e in interp.domain if isinstance(e, Hang)), default=0)
    can, _ = generate_canonical(star_kb, depth)

    def rename(e):
        if isinstance(e, Hang):
            return DomainElement(str(e.anchor), e.word)
        return DomainElement(str(e))

    mine = interp.image(rename)
    return set(mine.domain) == set(can.domain) and mine.facts() == can.facts()
