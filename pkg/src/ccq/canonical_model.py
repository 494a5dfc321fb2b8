"""Finite interpretations, depth-truncated canonical models and homomorphisms."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable

from .kb_core import (
    Atomic,
    ConceptAssertion,
    Exists,
    KnowledgeBase,
    Role,
    RoleAssertion,
    abox_role_facts,
    abox_types,
    generable_roles,
    require_satisfiable,
    saturate,
    successor_roles,
)


class HomomorphismError(ValueError):
    pass


@dataclass(frozen=True)
class DomainElement:
    """Canonical-model element ``root . R1 ... Rn``."""

    root: str
    suffix: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.suffix)

    @property
    def is_individual(self) -> bool:
        return not self.suffix

    def child(self, r: Role) -> "DomainElement":
        return DomainElement(self.root, self.suffix + (r,))

    def parent(self) -> "DomainElement":
        return DomainElement(self.root, self.suffix[:-1])

    def extend(self, word) -> "DomainElement":
        return DomainElement(self.root, self.suffix + tuple(word))

    def __str__(self):
        return ".".join([self.root] + [str(r) for r in self.suffix])


class FiniteInterpretation:
    """Explicit finite interpretation; elements are arbitrary hashables."""

    def __init__(self, domain: Iterable[Hashable], concepts: dict, roles: dict, individuals: dict):
        self.domain = tuple(dict.fromkeys(domain))
        self.concepts = {a: frozenset(s) for a, s in concepts.items()}
        self.roles = {p: frozenset(s) for p, s in roles.items()}
        self.individuals = dict(individuals)
        dom = set(self.domain)
        if len(set(self.individuals.values())) != len(self.individuals):
            raise ValueError("individual map is not injective")
        for e in self.individuals.values():
            if e not in dom:
                raise ValueError(f"individual image {e} not in domain")
        for a, s in self.concepts.items():
            if not s <= dom:
                raise ValueError(f"extension of {a} leaves the domain")
        for p, s in self.roles.items():
            for x, y in s:
                if x not in dom or y not in dom:
                    raise ValueError(f"extension of {p} leaves the domain")

    @cached_property
    def position(self) -> dict:
        return {e: i for i, e in enumerate(self.domain)}

    @cached_property
    def _adjacency(self) -> dict:
        adj: dict = {}
        for p, pairs in self.roles.items():
            fwd, bwd = {}, {}
            for x, y in pairs:
                fwd.setdefault(x, set()).add(y)
                bwd.setdefault(y, set()).add(x)
            pos = self.position
            adj[Role(p)] = {k: tuple(sorted(v, key=pos.__getitem__)) for k, v in fwd.items()}
            adj[Role(p, True)] = {k: tuple(sorted(v, key=pos.__getitem__)) for k, v in bwd.items()}
        return adj

    def ext(self, concept: str) -> frozenset:
        return self.concepts.get(concept, frozenset())

    def pairs(self, role: Role) -> frozenset:
        base = self.roles.get(role.name, frozenset())
        if role.inverted:
            return frozenset((y, x) for x, y in base)
        return base

    def successors(self, e, role: Role) -> tuple:
        return self._adjacency.get(role, {}).get(e, ())

    def has_pair(self, role: Role, x, y) -> bool:
        if role.inverted:
            x, y = y, x
        return (x, y) in self.roles.get(role.name, frozenset())

    def members(self, b) -> frozenset:
        if isinstance(b, Atomic):
            return self.ext(b.name)
        return frozenset(self._adjacency.get(b.role, {}).keys())

    def fact_count(self) -> int:
        return sum(map(len, self.concepts.values())) + sum(map(len, self.roles.values()))

    def restrict(self, keep) -> "FiniteInterpretation":
        keep = set(keep)
        return FiniteInterpretation(
            [e for e in self.domain if e in keep],
            {a: {e for e in s if e in keep} for a, s in self.concepts.items()},
            {p: {(x, y) for x, y in s if x in keep and y in keep} for p, s in self.roles.items()},
            {a: e for a, e in self.individuals.items() if e in keep},
        )

    def image(self, f) -> "FiniteInterpretation":
        """Image under an element map ``f`` (a dict or callable)."""
        g = f.__getitem__ if isinstance(f, dict) else f
        return FiniteInterpretation(
            [g(e) for e in self.domain],
            {a: {g(e) for e in s} for a, s in self.concepts.items()},
            {p: {(g(x), g(y)) for x, y in s} for p, s in self.roles.items()},
            {a: g(e) for a, e in self.individuals.items()},
        )

    def facts(self) -> set:
        out = {("c", a, e) for a, s in self.concepts.items() for e in s}
        out |= {("r", p, x, y) for p, s in self.roles.items() for x, y in s}
        return out

    def same_as(self, other: "FiniteInterpretation") -> bool:
        return (set(self.domain) == set(other.domain) and self.facts() == other.facts()
                and self.individuals == other.individuals)

    def dump(self) -> str:
        out = [f"elem {e}" for e in self.domain]
        pos = self.position
        for a in sorted(self.concepts):
            for e in sorted(self.concepts[a], key=pos.__getitem__):
                out.append(f"{a}: {e}")
        for p in sorted(self.roles):
            for x, y in sorted(self.roles[p], key=lambda xy: (pos[xy[0]], pos[xy[1]])):
                out.append(f"{p}: {x} {y}")
        return "\n".join(out) + "\n"

    def __len__(self):
        return len(self.domain)

    def __repr__(self):
        return f"FiniteInterpretation(|domain|={len(self.domain)}, facts={self.fact_count()})"


def is_model(interp: FiniteInterpretation, kb: KnowledgeBase) -> bool:
    """Full scan of every assertion and axiom of ``kb`` against ``interp``."""
    ind = interp.individuals
    if any(a not in ind for a in kb.individuals):
        return False
    for a in kb.abox:
        if isinstance(a, ConceptAssertion):
            if ind[a.individual] not in interp.ext(a.concept):
                return False
        elif not interp.has_pair(Role(a.role), ind[a.subject], ind[a.object]):
            return False
    for ax in kb.tbox:
        if ax.kind == "concept":
            left, right = interp.members(ax.lhs), interp.members(ax.rhs)
            ok = not (left & right) if ax.negated else left <= right
        else:
            left, right = interp.pairs(ax.lhs), interp.pairs(ax.rhs)
            ok = not (left & right) if ax.negated else left <= right
        if not ok:
            return False
    return True


# ------------------------------------------------------- canonical model

def _tail_concepts(table, r: Role, concept_names) -> list:
    sups = table.supers(Exists(r.inverse()))
    return [a for a in concept_names if Atomic(a) in sups]


def first_level_roles(kb: KnowledgeBase) -> dict:
    """individual -> roles R for which the word a.R exists."""
    table = kb.entailments
    types = abox_types(kb)
    facts = abox_role_facts(kb)
    witnessed: dict = {a: set() for a in kb.individuals}
    for (a, _b), rs in facts.items():
        witnessed[a].update(rs)
    out = {}
    for a in kb.individuals:
        out[a] = tuple(
            r for r in table.roles
            if Exists(r) in types[a] and r not in witnessed[a] and r not in table.empty_roles
        )
    return out


def generate_canonical(kb: KnowledgeBase, depth_limit: int):
    """Can(K) truncated to words of length <= depth_limit; returns (interp, truncated)."""
    require_satisfiable(kb)
    table = kb.entailments
    voc = kb.vocabulary
    types = abox_types(kb)
    concepts = {a: set() for a in voc.concepts}
    roles = {p: set() for p in voc.roles}

    inds = [DomainElement(a) for a in kb.individuals]
    for a, e in zip(kb.individuals, inds):
        for b in types[a]:
            if isinstance(b, Atomic):
                concepts.setdefault(b.name, set()).add(e)
    for (a, b), rs in abox_role_facts(kb).items():
        for r in rs:
            if not r.inverted:
                roles.setdefault(r.name, set()).add((DomainElement(a), DomainElement(b)))

    domain = list(inds)
    level = []
    starts = first_level_roles(kb)
    for e in inds:
        level.extend(e.child(r) for r in starts[e.root])
    truncated = False
    depth = 1
    while level:
        if depth > depth_limit:
            truncated = True
            break
        nxt = []
        for w in level:
            domain.append(w)
            last = w.suffix[-1]
            par = w.parent()
            for a in _tail_concepts(table, last, voc.concepts):
                concepts[a].add(w)
            for s in table.role_supers(last):
                if s.inverted:
                    roles.setdefault(s.name, set()).add((w, par))
                else:
                    roles.setdefault(s.name, set()).add((par, w))
            nxt.extend(w.child(s) for s in successor_roles(table, last))
        level = nxt
        depth += 1
    interp = FiniteInterpretation(domain, concepts, roles, {a: e for a, e in zip(kb.individuals, inds)})
    return interp, truncated


def full_canonical(kb: KnowledgeBase):
    """The untruncated canonical model, or None when the TBox has infinite depth."""
    from .kb_core import Finite, tbox_depth

    d = tbox_depth(kb.tbox)
    if not isinstance(d, Finite):
        return None
    interp, truncated = generate_canonical(kb, d.n)
    assert not truncated
    return interp


def canonical_size_bound(kb: KnowledgeBase) -> int:
    t = len(kb.tbox)
    n = len(kb.individuals)
    return n * t ** t + n


def unique_successor_violations(interp: FiniteInterpretation) -> list:
    """Anonymous elements with two distinct successors along the same role."""
    bad = []
    names = list(interp.roles)
    for e in interp.domain:
        if not isinstance(e, DomainElement) or e.is_individual:
            continue
        for p in names:
            for r in (Role(p), Role(p, True)):
                if len(interp.successors(e, r)) > 1:
                    bad.append((e, r))
    return bad


# ------------------------------------------------------ query-relevant words

def _query_roles(q) -> set:
    from .query_model import RoleAtom

    return {a.role for a in q.atoms if isinstance(a, RoleAtom)}


def query_words(tbox, q) -> tuple:
    """Γ for the query: role words a rooted match can reach, length <= |q|.

    A word is kept when every step is visible to some role atom of the
    query (``R <= P`` or ``R <= P-`` for a query role ``P``).
    """
    table = saturate(tuple(tbox))
    qroles = _query_roles(q)

    def visible(r: Role) -> bool:
        return any(s.name in qroles for s in table.role_supers(r))

    words = [()]
    frontier = [(r,) for r in generable_roles(table) if visible(r)]
    length = 1
    while frontier and length <= len(q.atoms):
        frontier.sort()
        words.extend(frontier)
        nxt = []
        for w in frontier:
            nxt.extend(w + (s,) for s in successor_roles(table, w[-1]) if visible(s))
        frontier = nxt
        length += 1
    return tuple(words)


def canonical_restricted(kb: KnowledgeBase, q) -> FiniteInterpretation:
    gamma = set(query_words(kb.tbox, q))
    interp, _ = generate_canonical(kb, len(q.atoms))
    return interp.restrict(e for e in interp.domain if e.suffix in gamma)


# ------------------------------------------------------------ homomorphisms

@dataclass
class Homomorphism:
    mapping: dict
    source: FiniteInterpretation
    target: FiniteInterpretation

    def __getitem__(self, e):
        return self.mapping[e]

    def is_valid(self) -> bool:
        return is_homomorphism(self.mapping, self.source, self.target)


def is_homomorphism(mapping: dict, source: FiniteInterpretation, target: FiniteInterpretation) -> bool:
    if any(e not in mapping for e in source.domain):
        return False
    for a, e in source.individuals.items():
        if target.individuals.get(a) != mapping[e]:
            return False
    for a, s in source.concepts.items():
        ext = target.ext(a)
        if any(mapping[e] not in ext for e in s):
            return False
    for p, s in source.roles.items():
        ext = target.roles.get(p, frozenset())
        if any((mapping[x], mapping[y]) not in ext for x, y in s):
            return False
    return True


def _local_facts(interp: FiniteInterpretation) -> tuple:
    conc: dict = {}
    rel: dict = {}
    for a, s in interp.concepts.items():
        for e in s:
            conc.setdefault(e, []).append(a)
    for p, s in interp.roles.items():
        for x, y in s:
            rel.setdefault(x, []).append((Role(p), y))
            if x != y:
                rel.setdefault(y, []).append((Role(p, True), x))
    return conc, rel


def find_homomorphism(canonical: FiniteInterpretation, model: FiniteInterpretation) -> Homomorphism:
    """First-fit homomorphism fixing individuals, elements taken in domain order."""
    conc, rel = _local_facts(canonical)
    f = {}
    for a, e in canonical.individuals.items():
        if a not in model.individuals:
            raise HomomorphismError(f"individual {a} missing from target")
        f[e] = model.individuals[a]
    for e in canonical.domain:
        if e in f:
            continue
        needs_c = conc.get(e, ())
        needs_r = rel.get(e, ())
        anchored = [(r, o) for r, o in needs_r if o in f]
        if anchored:
            r0, o0 = anchored[0]
            cands = model.successors(f[o0], r0.inverse())
        else:
            cands = model.domain
        for t in cands:
            if any(t not in model.ext(a) for a in needs_c):
                continue
            if all(model.has_pair(r, t, f[o] if o != e else t) for r, o in needs_r if o in f or o == e):
                f[e] = t
                break
        else:
            raise HomomorphismError(f"no image for {e}; target is not a model of the KB")
    h = Homomorphism(f, canonical, model)
    if not h.is_valid():
        raise HomomorphismError("first-fit map failed the homomorphism scan")
    return h


def _descendants(canonical: FiniteInterpretation, e: DomainElement) -> list:
    n = e.depth
    return [u for u in canonical.domain
            if u.root == e.root and u.depth > n and u.suffix[:n] == e.suffix]


def satisfies_star(h: Homomorphism) -> bool:
    """f(w1) = f(w2) implies f(w1 R) = f(w2 R) for all words present."""
    f = h.mapping
    dom = set(h.source.domain)
    by_image: dict = {}
    for e in h.source.domain:
        by_image.setdefault(f[e], []).append(e)
    for group in by_image.values():
        if len(group) < 2:
            continue
        roles_here = {u.suffix[-1] for w in group for u in _children(h.source, w)}
        for r in roles_here:
            imgs = {f[w.child(r)] for w in group if w.child(r) in dom}
            if len(imgs) > 1:
                return False
    return True


def _children(canonical, w):
    dom = canonical.position
    return [u for u in (w.child(r) for r in _all_roles(canonical)) if u in dom]


def _all_roles(interp):
    return [Role(p, inv) for p in sorted(interp.roles) for inv in (False, True)]


def normalize_homomorphism(h: Homomorphism, canonical: FiniteInterpretation | None = None) -> Homomorphism:
    """Copy images breadth-first so that equal images have equal child images."""
    canonical = canonical or h.source
    f = dict(h.mapping)
    order = list(canonical.domain)
    dom = canonical.position
    for _ in range(len(order) + 1):
        changed = False
        for i, w1 in enumerate(order):
            desc = None
            for w2 in order[i + 1:]:
                if f[w2] != f[w1]:
                    continue
                if desc is None:
                    desc = _descendants(canonical, w1)
                for u in desc:
                    tail = u.suffix[w1.depth:]
                    v = w2.extend(tail)
                    if v in dom and f[v] != f[u]:
                        f[v] = f[u]
                        changed = True
        if not changed:
            break
    out = Homomorphism(f, canonical, h.target)
    if not out.is_valid() or not satisfies_star(out):
        raise HomomorphismError("normalization did not converge to a (★) homomorphism")
    return out
