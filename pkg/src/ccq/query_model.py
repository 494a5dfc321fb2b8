"""Counting conjunctive queries: representation, classification, matching."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .canonical_model import FiniteInterpretation
from .kb_core import Role


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class ConceptAtom:
    concept: str
    term: str

    @property
    def terms(self):
        return (self.term,)

    def __str__(self):
        return f"{self.concept}({self.term})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    subject: str
    object: str

    @property
    def terms(self):
        return (self.subject, self.object)

    def __str__(self):
        return f"{self.role}({self.subject},{self.object})"


Atom = Union[ConceptAtom, RoleAtom]


@dataclass(frozen=True)
class CountingQuery:
    answer_vars: tuple
    existential_vars: tuple
    counting_vars: tuple
    atoms: tuple
    name: str = "q"

    def __post_init__(self):
        groups = (self.answer_vars, self.existential_vars, self.counting_vars)
        flat = [v for g in groups for v in g]
        if len(flat) != len(set(flat)):
            raise QueryError("variable lists must be pairwise disjoint")
        if not self.atoms:
            raise QueryError("empty query rejected")
        used = {t for a in self.atoms for t in a.terms}
        missing = [v for v in flat if v not in used]
        if missing:
            raise QueryError(f"variables {missing} occur in no atom")
        for g, nm in zip(groups, ("answer_vars", "existential_vars", "counting_vars")):
            object.__setattr__(self, nm, tuple(g))
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def variables(self) -> tuple:
        return self.answer_vars + self.existential_vars + self.counting_vars

    def is_var(self, t: str) -> bool:
        return t in self.variables

    def constants(self) -> tuple:
        return tuple(dict.fromkeys(t for a in self.atoms for t in a.terms if not self.is_var(t)))

    def __len__(self):
        return len(self.atoms)

    def __str__(self):
        return format_query(self)


_NAME = r"[A-Za-z_][\w.]*"
_ATOM = re.compile(rf"({_NAME})(-?)\(\s*({_NAME})\s*(?:,\s*({_NAME})\s*)?\)")


def _var_list(text: str) -> list:
    return [v for v in re.split(r"[\s,]+", text.strip()) if v]


def parse_query(text: str, individuals=None) -> CountingQuery:
    """``name(x1,..) := exists y1,.. ; count z1,.. ; atom , atom``.

    Terms that are not declared variables are individual names; when
    ``individuals`` is given, any other term is an undeclared variable.
    """
    text = " ".join(line.split("#", 1)[0] for line in text.splitlines()).strip()
    if ":=" not in text:
        raise QueryError("missing ':='")
    head, body = text.split(":=", 1)
    m = re.fullmatch(rf"\s*({_NAME})\s*\(([^)]*)\)\s*", head)
    if not m:
        raise QueryError(f"bad query head {head.strip()!r}")
    name, answer = m.group(1), _var_list(m.group(2))
    exist, count, atoms_text = [], [], None
    for part in body.split(";"):
        part = part.strip()
        if re.match(r"exists\b", part):
            exist.extend(_var_list(part[len("exists"):]))
        elif re.match(r"count\b", part):
            count.extend(_var_list(part[len("count"):]))
        elif part:
            if atoms_text is not None:
                raise QueryError("more than one atom list")
            atoms_text = part
    if not atoms_text:
        raise QueryError("empty query rejected")
    atoms = []
    pos = 0
    for am in _ATOM.finditer(atoms_text):
        gap = atoms_text[pos:am.start()].strip()
        if gap not in ("", ","):
            raise QueryError(f"cannot parse {gap!r}")
        pos = am.end()
        pred, inv, t1, t2 = am.groups()
        if t2 is None:
            if inv:
                raise QueryError(f"inverse marker on concept {pred}")
            atoms.append(ConceptAtom(pred, t1))
        elif inv:
            atoms.append(RoleAtom(pred, t2, t1))
        else:
            atoms.append(RoleAtom(pred, t1, t2))
    if atoms_text[pos:].strip():
        raise QueryError(f"trailing text {atoms_text[pos:].strip()!r}")
    declared = set(answer) | set(exist) | set(count)
    if individuals is not None:
        known = set(individuals)
        for a in atoms:
            for t in a.terms:
                if t not in declared and t not in known:
                    raise QueryError(f"undeclared variable {t!r}")
    return CountingQuery(tuple(answer), tuple(exist), tuple(count), tuple(atoms), name)


def format_query(q: CountingQuery) -> str:
    head = f"{q.name}({','.join(q.answer_vars)}) :="
    parts = []
    if q.existential_vars:
        parts.append("exists " + ",".join(q.existential_vars))
    if q.counting_vars:
        parts.append("count " + ",".join(q.counting_vars))
    parts.append(" , ".join(str(a) for a in q.atoms))
    return head + " " + " ; ".join(parts)


# ---------------------------------------------------------- classification

def _components(q: CountingQuery) -> list:
    parent = {t: t for a in q.atoms for t in a.terms}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for a in q.atoms:
        if isinstance(a, RoleAtom):
            parent[find(a.subject)] = find(a.object)
    groups: dict = {}
    for t in parent:
        groups.setdefault(find(t), set()).add(t)
    return list(groups.values())


def is_rooted(q: CountingQuery) -> bool:
    roots = set(q.answer_vars)
    for comp in _components(q):
        if not any(t in roots or not q.is_var(t) for t in comp):
            return False
    return True


def classify(q: CountingQuery) -> dict:
    return {"rooted": is_rooted(q), "exhaustive": not q.existential_vars}


# ---------------------------------------------------------------- matching

@dataclass(frozen=True)
class Match:
    assignment: tuple  # (term, element) pairs over the query variables

    def __getitem__(self, v):
        return dict(self.assignment)[v]

    def restrict(self, variables) -> tuple:
        d = dict(self.assignment)
        return tuple(d[v] for v in variables)


def _resolve(q: CountingQuery, interp: FiniteInterpretation, tup) -> dict:
    tup = tuple(tup)
    if len(tup) != len(q.answer_vars):
        raise QueryError(f"expected {len(q.answer_vars)} answer individuals, got {len(tup)}")
    fixed = {}
    for x, a in zip(q.answer_vars, tup):
        if a not in interp.individuals:
            raise QueryError(f"individual {a!r} absent from interpretation")
        if x in fixed and fixed[x] != interp.individuals[a]:
            return None
        fixed[x] = interp.individuals[a]
    for c in q.constants():
        if c not in interp.individuals:
            return None
        fixed[c] = interp.individuals[c]
    return fixed


def _atom_holds(atom, interp, asg) -> bool:
    if isinstance(atom, ConceptAtom):
        return asg[atom.term] in interp.ext(atom.concept)
    return interp.has_pair(Role(atom.role), asg[atom.subject], asg[atom.object])


class _Solver:
    """Backtracking homomorphism search over a set of atoms."""

    def __init__(self, atoms, interp: FiniteInterpretation):
        self.atoms = list(atoms)
        self.interp = interp
        self.by_term: dict = {}
        for a in self.atoms:
            for t in set(a.terms):
                self.by_term.setdefault(t, []).append(a)

    def _candidates(self, v, asg):
        interp = self.interp
        best = None
        for a in self.by_term.get(v, ()):
            if isinstance(a, RoleAtom):
                if a.subject == v and a.object in asg:
                    c = interp.successors(asg[a.object], Role(a.role, True))
                elif a.object == v and a.subject in asg:
                    c = interp.successors(asg[a.subject], Role(a.role))
                else:
                    continue
            else:
                c = interp.ext(a.concept)
            if best is None or len(c) < len(best):
                best = c
        if best is None:
            return interp.domain
        if not isinstance(best, tuple):
            pos = interp.position
            best = sorted(best, key=pos.__getitem__)
        return best

    def _pick(self, todo, asg):
        def score(v):
            linked = 0
            for a in self.by_term.get(v, ()):
                if isinstance(a, RoleAtom) and (a.subject in asg or a.object in asg):
                    linked += 2
                elif isinstance(a, ConceptAtom):
                    linked += 1
            return linked
        return max(todo, key=score)

    def solve(self, variables, asg) -> Iterator[dict]:
        todo = [v for v in variables if v not in asg]
        yield from self._solve(todo, dict(asg))

    def _solve(self, todo, asg):
        if not todo:
            yield dict(asg)
            return
        v = self._pick(todo, asg)
        rest = [u for u in todo if u != v]
        for e in self._candidates(v, asg):
            asg[v] = e
            ok = True
            for a in self.by_term.get(v, ()):
                if all(t in asg for t in a.terms) and not _atom_holds(a, self.interp, asg):
                    ok = False
                    break
            if ok:
                yield from self._solve(rest, asg)
            del asg[v]

    def exists(self, variables, asg) -> bool:
        return next(self.solve(variables, asg), None) is not None


def enumerate_matches(q: CountingQuery, interp: FiniteInterpretation, tup=()) -> list:
    """All matches with x̄ ↦ ā, sorted by the domain order of the variables in declaration order."""
    fixed = _resolve(q, interp, tup)
    if fixed is None:
        return []
    solver = _Solver(q.atoms, interp)
    for a in q.atoms:
        if all(t in fixed for t in a.terms) and not _atom_holds(a, interp, fixed):
            return []
    pos = interp.position
    out = []
    for asg in solver.solve(q.variables, fixed):
        out.append(Match(tuple((v, asg[v]) for v in q.variables)))
    out.sort(key=lambda m: tuple(pos[e] for _, e in m.assignment))
    return out


def _split(q: CountingQuery, fixed: dict) -> list:
    """Groups of atoms connected through unfixed variables."""
    free = [a for a in q.atoms if any(t not in fixed for t in a.terms)]
    parent = {}

    def find(t):
        while parent.setdefault(t, t) != t:
            t = parent[t]
        return t

    for a in free:
        vs = [t for t in a.terms if t not in fixed]
        for t in vs[1:]:
            parent[find(t)] = find(vs[0])
        find(vs[0])
    groups: dict = {}
    for a in free:
        v = next(t for t in a.terms if t not in fixed)
        groups.setdefault(find(v), []).append(a)
    return list(groups.values())


def iter_cmatches(q: CountingQuery, interp: FiniteInterpretation, tup=()) -> Iterator[tuple]:
    seen = set()
    for m in enumerate_matches(q, interp, tup):
        key = m.restrict(q.counting_vars)
        if key not in seen:
            seen.add(key)
            yield key


def count_cmatches(q: CountingQuery, interp: FiniteInterpretation, tup=()) -> int:
    """Number of distinct restrictions of matches to the counting variables.

    Independent parts of the query multiply.
    """
    fixed = _resolve(q, interp, tup)
    if fixed is None:
        return 0
    for a in q.atoms:
        if all(t in fixed for t in a.terms) and not _atom_holds(a, interp, fixed):
            return 0
    zset = set(q.counting_vars)
    parts = []
    for atoms in _split(q, fixed):
        vs = list(dict.fromkeys(t for a in atoms for t in a.terms if t not in fixed))
        zs = [v for v in vs if v in zset]
        ys = [v for v in vs if v not in zset]
        parts.append((atoms, zs, ys))
    # cheap existence checks first so empty parts short-circuit
    for atoms, zs, ys in parts:
        if not _Solver(atoms, interp).exists(zs + ys, fixed):
            return 0
    total = 1
    for atoms, zs, ys in parts:
        if not zs:
            continue
        total *= _count_part(atoms, zs, ys, interp, fixed)
    return total


def _count_part(atoms, zs, ys, interp, fixed) -> int:
    zset = set(zs)
    known = set(fixed) | zset
    z_atoms = [a for a in atoms if all(t in known for t in a.terms)]
    full = _Solver(atoms, interp)
    zsolver = _Solver(z_atoms, interp)
    if not ys:
        return sum(1 for _ in zsolver.solve(zs, fixed))
    n = 0
    for asg in zsolver.solve(zs, fixed):
        if full.exists(ys, asg):
            n += 1
    return n


def answers_in_interpretation(q: CountingQuery, interp: FiniteInterpretation, include_zero=False) -> dict:
    """tuple of individuals -> count, over all tuples of interpretation individuals."""
    from itertools import product

    names = list(interp.individuals)
    out = {}
    for tup in product(names, repeat=len(q.answer_vars)):
        c = count_cmatches(q, interp, tup)
        if c or include_zero:
            out[tup] = c
    return out


def as_cq(q: CountingQuery) -> CountingQuery:
    """The underlying CQ: every non-answer variable existential."""
    return CountingQuery(q.answer_vars, q.existential_vars + q.counting_vars, (), q.atoms, q.name)
