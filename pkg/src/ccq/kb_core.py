"""Vocabulary, TBox/ABox representation, parsing and entailment for DL-Lite.

Two dialects are supported: ``core`` (concept inclusions only) and ``R``
(concept and role inclusions).  Right-hand sides may be negated.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Union


class KBError(ValueError):
    """Malformed knowledge base document or structure."""


class UnsatisfiableKB(ValueError):
    """Raised when an operation needs a satisfiable KB and did not get one."""


@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def inverse(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self):
        return self.name + ("-" if self.inverted else "")


@dataclass(frozen=True, order=True)
class Atomic:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    role: Role

    def __str__(self):
        return f"exists {self.role}"


BasicConcept = Union[Atomic, Exists]


@dataclass(frozen=True)
class Axiom:
    """``lhs <= rhs`` or ``lhs <= not rhs``; both sides are concepts or both roles."""

    lhs: Union[BasicConcept, Role]
    rhs: Union[BasicConcept, Role]
    negated: bool = False

    @property
    def kind(self) -> str:
        return "role" if isinstance(self.lhs, Role) else "concept"

    def __str__(self):
        neg = "not " if self.negated else ""
        return f"{self.lhs} <= {neg}{self.rhs}"


@dataclass(frozen=True, order=True)
class ConceptAssertion:
    concept: str
    individual: str

    def __str__(self):
        return f"{self.concept}({self.individual})"


@dataclass(frozen=True, order=True)
class RoleAssertion:
    role: str
    subject: str
    object: str

    def __str__(self):
        return f"{self.role}({self.subject},{self.object})"


Assertion = Union[ConceptAssertion, RoleAssertion]


def _dedupe(items):
    seen = {}
    for it in items:
        seen.setdefault(it, None)
    return tuple(seen)


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: tuple
    abox: tuple
    dialect: str = "core"
    individuals: tuple = ()

    def __post_init__(self):
        tbox = tuple(self.tbox)
        abox = _dedupe(self.abox)
        if self.dialect not in ("core", "R"):
            raise KBError(f"unknown dialect {self.dialect!r}")
        if self.dialect == "core" and any(ax.kind == "role" for ax in tbox):
            raise KBError("role inclusion in a core-dialect KB")
        names = list(self.individuals)
        for a in abox:
            if isinstance(a, ConceptAssertion):
                names.append(a.individual)
            else:
                names.extend((a.subject, a.object))
        object.__setattr__(self, "tbox", tbox)
        object.__setattr__(self, "abox", abox)
        object.__setattr__(self, "individuals", _dedupe(names))

    @cached_property
    def entailments(self) -> "EntailmentTable":
        return saturate(self.tbox)

    @cached_property
    def vocabulary(self) -> "Vocabulary":
        return Vocabulary.of(self)

    def with_abox(self, abox, individuals=()) -> "KnowledgeBase":
        return KnowledgeBase(self.tbox, tuple(abox), self.dialect, tuple(individuals))

    def __str__(self):
        return format_kb(self)


@dataclass(frozen=True)
class Vocabulary:
    """Names interned to dense integers in first-appearance order."""

    concepts: tuple
    roles: tuple
    individuals: tuple

    @classmethod
    def of(cls, kb: KnowledgeBase, extra_concepts=(), extra_roles=()):
        concepts, roles = [], []
        for ax in kb.tbox:
            for side in (ax.lhs, ax.rhs):
                if isinstance(side, Role):
                    roles.append(side.name)
                elif isinstance(side, Exists):
                    roles.append(side.role.name)
                else:
                    concepts.append(side.name)
        for a in kb.abox:
            if isinstance(a, ConceptAssertion):
                concepts.append(a.concept)
            else:
                roles.append(a.role)
        concepts.extend(extra_concepts)
        roles.extend(extra_roles)
        return cls(_dedupe(concepts), _dedupe(roles), kb.individuals)

    @cached_property
    def ids(self) -> dict:
        out = {}
        for group in (self.concepts, self.roles, self.individuals):
            out.update({n: i for i, n in enumerate(group)})
        return out


def make_kb(tbox: Iterable[Axiom] = (), abox: Iterable[Assertion] = (), dialect=None,
            individuals=()) -> KnowledgeBase:
    tbox = tuple(tbox)
    if dialect is None:
        dialect = "R" if any(ax.kind == "role" for ax in tbox) else "core"
    return KnowledgeBase(tbox, tuple(abox), dialect, tuple(individuals))


# ---------------------------------------------------------------- parsing

_NAME = r"[A-Za-z_][\w.]*"
_ASSERTION = re.compile(rf"^({_NAME})\(\s*({_NAME})\s*(?:,\s*({_NAME})\s*)?\)$")


def _parse_side(text: str, lineno: int, role_names: set):
    text = text.strip()
    if text.startswith("exists "):
        r = text[len("exists "):].strip()
        inv = r.endswith("-")
        r = r.rstrip("-")
        if not re.fullmatch(_NAME, r):
            raise KBError(f"line {lineno}: bad role {r!r}")
        return Exists(Role(r, inv))
    inv = text.endswith("-")
    name = text.rstrip("-")
    if not re.fullmatch(_NAME, name):
        raise KBError(f"line {lineno}: cannot parse {text!r}")
    if inv or name in role_names:
        return Role(name, inv)
    return Atomic(name)


def parse_kb(text: str) -> KnowledgeBase:
    """Parse the line-oriented KB format.

    A bare name on either side of ``<=`` denotes a role when the same name
    is used as a role anywhere in the document (``exists R``, ``R-`` or a
    binary assertion), otherwise an atomic concept.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))

    role_names = set()
    for _, line in lines:
        role_names.update(re.findall(rf"exists\s+({_NAME})", line))
        role_names.update(re.findall(rf"({_NAME})-", line))
        m = _ASSERTION.match(line)
        if m and m.group(3):
            role_names.add(m.group(1))

    declared = None
    individuals = []
    tbox, abox = [], []
    for lineno, line in lines:
        if line.startswith("dialect "):
            declared = line.split()[1]
            if declared not in ("core", "R"):
                raise KBError(f"line {lineno}: unknown dialect {declared!r}")
            continue
        if line.startswith("individuals "):
            individuals.extend(line.split()[1:])
            continue
        if "<=" in line:
            lhs, rhs = line.split("<=", 1)
            rhs = rhs.strip()
            negated = rhs.startswith("not ")
            if negated:
                rhs = rhs[4:]
            left = _parse_side(lhs, lineno, role_names)
            right = _parse_side(rhs, lineno, role_names)
            if isinstance(left, Role) != isinstance(right, Role):
                raise KBError(f"line {lineno}: mixes a role and a concept")
            tbox.append(Axiom(left, right, negated))
            continue
        m = _ASSERTION.match(line)
        if not m:
            raise KBError(f"line {lineno}: syntax error in {line!r}")
        if m.group(3):
            abox.append(RoleAssertion(m.group(1), m.group(2), m.group(3)))
        else:
            if m.group(1) in role_names:
                raise KBError(f"line {lineno}: {m.group(1)} used both as role and concept")
            abox.append(ConceptAssertion(m.group(1), m.group(2)))

    has_ri = any(ax.kind == "role" for ax in tbox)
    if declared == "core" and has_ri:
        raise KBError("role inclusion under declared core dialect")
    dialect = declared or ("R" if has_ri else "core")
    return KnowledgeBase(tuple(tbox), tuple(abox), dialect, tuple(individuals))


def format_kb(kb: KnowledgeBase) -> str:
    out = [f"dialect {kb.dialect}"]
    if kb.individuals:
        out.append("individuals " + " ".join(kb.individuals))
    out.extend(str(ax) for ax in kb.tbox)
    out.extend(str(a) for a in kb.abox)
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ saturation

@dataclass(frozen=True)
class EntailmentTable:
    concept_sub: dict
    role_sub: dict
    disjoint_concepts: frozenset
    disjoint_roles: frozenset
    empty_concepts: frozenset
    empty_roles: frozenset
    roles: tuple = field(default=())  # roles (both directions) of the TBox, sorted

    def supers(self, b: BasicConcept) -> frozenset:
        return self.concept_sub.get(b, frozenset((b,)))

    def role_supers(self, r: Role) -> frozenset:
        return self.role_sub.get(r, frozenset((r,)))

    @cached_property
    def successor_cache(self) -> dict:
        return {}


def _closure(nodes, edges) -> dict:
    out = {}
    for n in nodes:
        seen = {n}
        todo = deque([n])
        while todo:
            cur = todo.popleft()
            for nxt in edges.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        out[n] = frozenset(seen)
    return out


@lru_cache(maxsize=256)
def saturate(tbox: tuple) -> EntailmentTable:
    tbox = tuple(tbox)
    role_names, concept_names = [], []
    for ax in tbox:
        for side in (ax.lhs, ax.rhs):
            if isinstance(side, Role):
                role_names.append(side.name)
            elif isinstance(side, Exists):
                role_names.append(side.role.name)
            else:
                concept_names.append(side.name)
    role_names = _dedupe(role_names)
    roles = tuple(sorted({Role(n, inv) for n in role_names for inv in (False, True)}))
    concepts = [Atomic(n) for n in _dedupe(concept_names)] + [Exists(r) for r in roles]

    role_edges: dict = {}
    for ax in tbox:
        if ax.kind == "role" and not ax.negated:
            role_edges.setdefault(ax.lhs, set()).add(ax.rhs)
            role_edges.setdefault(ax.lhs.inverse(), set()).add(ax.rhs.inverse())
    role_sub = _closure(roles, role_edges)

    concept_edges: dict = {}
    for ax in tbox:
        if ax.kind == "concept" and not ax.negated:
            concept_edges.setdefault(ax.lhs, set()).add(ax.rhs)
    for r, sups in role_sub.items():
        for s in sups:
            if s != r:
                concept_edges.setdefault(Exists(r), set()).add(Exists(s))
    concept_sub = _closure(concepts, concept_edges)

    dis_c = set()
    dis_r = set()
    for ax in tbox:
        if not ax.negated:
            continue
        if ax.kind == "concept":
            below_l = [c for c in concepts if ax.lhs in concept_sub[c]]
            below_r = [c for c in concepts if ax.rhs in concept_sub[c]]
            for x in below_l:
                for y in below_r:
                    dis_c.add((x, y))
                    dis_c.add((y, x))
        else:
            below_l = [r for r in roles if ax.lhs in role_sub[r]]
            below_r = [r for r in roles if ax.rhs in role_sub[r]]
            for x in below_l:
                for y in below_r:
                    for p in ((x, y), (y, x), (x.inverse(), y.inverse()), (y.inverse(), x.inverse())):
                        dis_r.add(p)

    empty = {c for c in concepts if (c, c) in dis_c}
    empty |= {Exists(r) for r in roles if (r, r) in dis_r}
    changed = True
    while changed:
        changed = False
        for c in concepts:
            if c in empty:
                continue
            if any(s in empty for s in concept_sub[c]) or (
                isinstance(c, Exists) and Exists(c.role.inverse()) in empty
            ):
                empty.add(c)
                changed = True
    empty_roles = frozenset(r for r in roles if Exists(r) in empty)

    return EntailmentTable(
        concept_sub=concept_sub,
        role_sub=role_sub,
        disjoint_concepts=frozenset(dis_c),
        disjoint_roles=frozenset(dis_r),
        empty_concepts=frozenset(empty),
        empty_roles=empty_roles,
        roles=roles,
    )


def entails_concept_inclusion(table: EntailmentTable, b1: BasicConcept, b2: BasicConcept,
                              negated: bool = False) -> bool:
    if b1 in table.empty_concepts:
        return True
    if negated:
        return b2 in table.empty_concepts or (b1, b2) in table.disjoint_concepts
    return b2 in table.supers(b1)


def entails_role_inclusion(table: EntailmentTable, r: Role, s: Role, negated: bool = False) -> bool:
    if r in table.empty_roles:
        return True
    if negated:
        return s in table.empty_roles or (r, s) in table.disjoint_roles
    return s in table.role_supers(r)


def entails(table: EntailmentTable, axiom: Axiom) -> bool:
    if axiom.kind == "role":
        return entails_role_inclusion(table, axiom.lhs, axiom.rhs, axiom.negated)
    return entails_concept_inclusion(table, axiom.lhs, axiom.rhs, axiom.negated)


# ------------------------------------------------------- ABox reasoning

def abox_types(kb: KnowledgeBase) -> dict:
    """individual -> set of basic concepts entailed for it (positive closure)."""
    table = kb.entailments
    seeds = {a: set() for a in kb.individuals}
    for a in kb.abox:
        if isinstance(a, ConceptAssertion):
            seeds[a.individual].add(Atomic(a.concept))
        else:
            seeds[a.subject].add(Exists(Role(a.role)))
            seeds[a.object].add(Exists(Role(a.role, True)))
    return {ind: frozenset().union(*(table.supers(b) for b in bs)) if bs else frozenset()
            for ind, bs in seeds.items()}


def abox_role_facts(kb: KnowledgeBase) -> dict:
    """(a, b) -> set of roles R with K |= R(a,b), closed under inverses."""
    table = kb.entailments
    out: dict = {}
    for a in kb.abox:
        if isinstance(a, RoleAssertion):
            for s in table.role_supers(Role(a.role)):
                out.setdefault((a.subject, a.object), set()).add(s)
                out.setdefault((a.object, a.subject), set()).add(s.inverse())
    return out


def is_satisfiable(kb: KnowledgeBase) -> bool:
    table = kb.entailments
    for ts in abox_types(kb).values():
        if ts & table.empty_concepts:
            return False
        for x in ts:
            for y in ts:
                if (x, y) in table.disjoint_concepts:
                    return False
    for rs in abox_role_facts(kb).values():
        if rs & table.empty_roles:
            return False
        for x in rs:
            for y in rs:
                if (x, y) in table.disjoint_roles:
                    return False
    return True


def require_satisfiable(kb: KnowledgeBase):
    if not is_satisfiable(kb):
        raise UnsatisfiableKB("knowledge base is unsatisfiable")


def instance_check(kb: KnowledgeBase, c: BasicConcept, a: str) -> bool:
    require_satisfiable(kb)
    if a not in kb.individuals:
        raise KBError(f"unknown individual {a!r}")
    return c in abox_types(kb)[a]


# ----------------------------------------------- anonymous-part structure

def successor_roles(table: EntailmentTable, r: Role) -> tuple:
    """Roles S that an element reached by an R-edge must get a fresh S-child for."""
    cache = table.successor_cache
    if r not in cache:
        back = r.inverse()
        sups = table.supers(Exists(back))
        cache[r] = tuple(
            s for s in table.roles
            if Exists(s) in sups and s not in table.role_supers(back) and s not in table.empty_roles
        )
    return cache[r]


def generable_roles(table: EntailmentTable) -> tuple:
    """Roles R for which some concept forces an R-successor it does not already carry."""
    out = set()
    for b, sups in table.concept_sub.items():
        if b in table.empty_concepts:
            continue
        for s in sups:
            if not isinstance(s, Exists) or s.role in table.empty_roles:
                continue
            if isinstance(b, Exists) and s.role in table.role_supers(b.role):
                continue
            out.add(s.role)
    return tuple(sorted(out))


@dataclass(frozen=True)
class Finite:
    n: int

    def __str__(self):
        return f"Finite({self.n})"


@dataclass(frozen=True)
class Infinite:
    def __str__(self):
        return "Infinite"


INFINITE = Infinite()


def tbox_depth(tbox) -> Union[Finite, Infinite]:
    table = saturate(tuple(tbox))
    starts = generable_roles(table)
    longest: dict = {}
    state: dict = {}

    def visit(r):  # returns longest path length (in roles) from r, None on cycle
        if state.get(r) == 1:
            return None
        if state.get(r) == 2:
            return longest[r]
        state[r] = 1
        best = 1
        for s in successor_roles(table, r):
            sub = visit(s)
            if sub is None:
                return None
            best = max(best, 1 + sub)
        state[r] = 2
        longest[r] = best
        return best

    depth = 0
    for r in starts:
        d = visit(r)
        if d is None:
            return INFINITE
        depth = max(depth, d)
    return Finite(depth)


def basic_concepts_of(kb: KnowledgeBase) -> tuple:
    """All basic concepts over the KB signature."""
    voc = kb.vocabulary
    roles = sorted({Role(n, inv) for n in voc.roles for inv in (False, True)})
    return tuple(Atomic(c) for c in voc.concepts) + tuple(Exists(r) for r in roles)
