"""Threshold circuits deciding exhaustive rooted CCQs, and PP path counting."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from itertools import product
from string import ascii_lowercase

from .canonical_model import query_words
from .kb_core import (
    Atomic,
    ConceptAssertion,
    Exists,
    KBError,
    Role,
    RoleAssertion,
    make_kb,
    saturate,
)
from .query_model import ConceptAtom, CountingQuery, QueryError, RoleAtom, classify

KINDS = ("input", "and", "or", "not", "threshold")


class CircuitError(ValueError):
    pass


def _gate_id(label: str) -> str:
    return hashlib.sha1(label.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    inputs: tuple = ()
    label: str = ""
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if self.kind == "not" and len(self.inputs) != 1:
            raise CircuitError("not-gates take exactly one input")
        if self.kind == "threshold" and (self.k is None or self.k < 0):
            raise CircuitError("threshold gates need k >= 0")
        if self.kind == "input" and self.inputs:
            raise CircuitError("input gates take no inputs")


@dataclass
class Circuit:
    gates: dict = field(default_factory=dict)  # id -> Gate, insertion order is topological
    output: str | None = None
    individual_count: int = 0
    individuals: tuple = ()
    inputs: dict = field(default_factory=dict)  # label -> gate id
    meta: dict = field(default_factory=dict)

    def add(self, kind: str, label: str, inputs=(), k=None) -> str:
        gid = _gate_id(label)
        if gid in self.gates:
            old = self.gates[gid]
            if old.label != label:
                raise CircuitError(f"gate id collision on {label!r}")
            return gid
        for i in inputs:
            if i not in self.gates:
                raise CircuitError(f"gate {label!r} uses unknown input {i}")
        self.gates[gid] = Gate(gid, kind, tuple(inputs), label, k)
        if kind == "input":
            self.inputs[label] = gid
        return gid

    def depth(self) -> int:
        d: dict = {}
        for g in self.gates.values():
            d[g.id] = 0 if not g.inputs else 1 + max(d[i] for i in g.inputs)
        return d[self.output] if self.output else 0

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates.values() if g.kind == kind)

    def by_label(self, label: str) -> Gate:
        return self.gates[_gate_id(label)]

    def labels(self, prefix: str = "") -> list:
        return [g.label for g in self.gates.values() if g.label.startswith(prefix)]

    # serialization
    def dumps(self) -> str:
        lines = [f"# individuals {' '.join(self.individuals)}", f"# output {self.output}"]
        for g in self.gates.values():
            k = f" {g.k}" if g.kind == "threshold" else ""
            lines.append(f"{g.id} {g.kind}{k} {g.label} <- {','.join(g.inputs)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        c = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "individuals":
                    c.individuals = tuple(parts[1:])
                    c.individual_count = len(c.individuals)
                elif parts and parts[0] == "output":
                    c.output = parts[1]
                continue
            try:
                head, tail = line.split(" <- ")
            except ValueError:
                # an input gate line ends in "<- " which strip() shortens
                if not line.endswith("<-"):
                    raise CircuitError(f"line {lineno}: missing '<-'")
                head, tail = line[:-2].rstrip(), ""
            parts = head.split()
            gid, kind = parts[0], parts[1]
            k = int(parts[2]) if kind == "threshold" else None
            label = parts[3] if kind == "threshold" else parts[2]
            if _gate_id(label) != gid:
                raise CircuitError(f"line {lineno}: id does not hash the label")
            inputs = tuple(i for i in tail.split(",") if i)
            c.add(kind, label, inputs, k)
        if c.output is None or c.output not in c.gates:
            raise CircuitError("circuit file has no valid output gate")
        return c

    def to_dot(self) -> str:
        shapes = {"input": "box", "and": "ellipse", "or": "diamond", "not": "invtriangle", "threshold": "octagon"}
        out = ["digraph circuit {", "  rankdir=BT;"]
        for g in self.gates.values():
            text = g.label.replace('"', "'")
            out.append(f'  "{g.id}" [label="{text}", shape={shapes[g.kind]}];')
        for g in self.gates.values():
            for i in g.inputs:
                out.append(f'  "{i}" -> "{g.id}";')
        out.append("}")
        return "\n".join(out) + "\n"


def default_individuals(ell: int) -> tuple:
    names = []
    for i in range(ell):
        n, s = i, ""
        while True:
            s = ascii_lowercase[n % 26] + s
            n = n // 26 - 1
            if n < 0:
                break
        names.append(s)
    return tuple(names)


def _word_str(a: str, w: tuple) -> str:
    return ".".join([a] + [str(r) for r in w])


def bit_width(ell: int, tbox_size: int, query_size: int) -> int:
    k_max = (ell + tbox_size) ** query_size
    return max(1, math.ceil(math.log2(k_max)) + 1) if k_max > 0 else 1


def threshold_limit(ell: int, tbox_size: int, query_size: int) -> int:
    return (ell + tbox_size) ** query_size


def relevant_mappings(tbox, q: CountingQuery, individuals, words=None) -> list:
    """Maps of query variables onto elements (a, w) that can be matches in some Can(T, A)."""
    table = saturate(tuple(tbox))
    words = query_words(tbox, q) if words is None else words
    elements = [(a, w) for a in individuals for w in words]
    variables = list(q.answer_vars) + list(q.counting_vars)
    for c in q.constants():
        if c not in individuals:
            raise QueryError(f"query constant {c!r} is not among the circuit individuals")
    answer = set(q.answer_vars)

    def fixed(t, asg):
        return asg.get(t, (t, ())) if q.is_var(t) else (t, ())

    def ok(atom, asg) -> bool:
        if any(q.is_var(t) and t not in asg for t in atom.terms):
            return True
        if isinstance(atom, ConceptAtom):
            a, w = fixed(atom.term, asg)
            if not w:
                return True
            return Atomic(atom.concept) in table.supers(Exists(w[-1].inverse()))
        (a1, w1), (a2, w2) = fixed(atom.subject, asg), fixed(atom.object, asg)
        if not w1 and not w2:
            return True
        if a1 != a2:
            return False
        r = Role(atom.role)
        if w2 == w1 + (r,):
            return True
        return w1 == w2 + (r.inverse(),)

    out = []

    def rec(i, asg):
        if i == len(variables):
            out.append(dict(asg))
            return
        v = variables[i]
        for e in elements:
            if v in answer and e[1]:
                continue
            asg[v] = e
            if all(ok(at, asg) for at in q.atoms if v in at.terms):
                rec(i + 1, asg)
            del asg[v]

    rec(0, {})
    return out


def build_tc0_circuit(tbox, q: CountingQuery, ell: int, individuals=None) -> Circuit:
    tbox = tuple(tbox)
    if any(ax.kind == "role" for ax in tbox):
        raise KBError("circuit construction needs a DL-Lite_core TBox")
    cls = classify(q)
    if not (cls["rooted"] and cls["exhaustive"]):
        raise QueryError("circuit construction needs an exhaustive rooted query")
    inds = tuple(individuals) if individuals is not None else default_individuals(ell)
    if len(inds) != ell:
        raise CircuitError("individual list must have length ell")
    table = saturate(tbox)
    words = query_words(tbox, q)

    role_names = list(dict.fromkeys(
        [r.name for r in table.roles] + [a.role for a in q.atoms if isinstance(a, RoleAtom)]))
    concept_names = list(dict.fromkeys(
        [c.name for c in table.concept_sub if isinstance(c, Atomic)]
        + [a.concept for a in q.atoms if isinstance(a, ConceptAtom)]))
    roles = [Role(p, inv) for p in role_names for inv in (False, True)]

    c = Circuit(individual_count=ell, individuals=inds)
    n_bits = bit_width(ell, len(tbox), len(q))
    k_max = threshold_limit(ell, len(tbox), len(q))
    c.meta.update(bits=n_bits, k_max=k_max, words=[".".join(map(str, w)) for w in words],
                  concepts=concept_names, roles=role_names, answer_vars=list(q.answer_vars))

    for p in role_names:
        for a in inds:
            for b in inds:
                c.add("input", f"in:{p}({a},{b})")
    for A in concept_names:
        for a in inds:
            c.add("input", f"in:{A}({a})")
    for k, _x in enumerate(q.answer_vars, 1):
        for a in inds:
            c.add("input", f"in:x{k}={a}")
    bits = [c.add("input", f"in:b{j}") for j in range(n_bits)]

    def role_in(r: Role, a, b):
        return c.inputs[f"in:{r.name}({b},{a})" if r.inverted else f"in:{r.name}({a},{b})"]

    # K |= C(a) for every relevant positive concept
    def entails_gate(concept, a) -> str:
        label = f"or:K|={concept}({a})".replace(" ", "")
        ins = []
        for A in concept_names:
            if concept in table.supers(Atomic(A)):
                ins.append(c.inputs[f"in:{A}({a})"])
        for r in roles:
            if concept in table.supers(Exists(r)):
                for b in inds:
                    ins.append(role_in(r, a, b))
        return c.add("or", label, ins)

    concept_gates = {}
    for a in inds:
        for A in concept_names:
            concept_gates[(Atomic(A), a)] = entails_gate(Atomic(A), a)
        for r in roles:
            concept_gates[(Exists(r), a)] = entails_gate(Exists(r), a)

    exist_gates = {}
    for a in inds:
        for w in words:
            if not w:
                continue
            r = w[0]
            has = c.add("or", f"or:has-{r}-succ({a})", [role_in(r, a, b) for b in inds])
            neg = c.add("not", f"not:has-{r}-succ({a})", [has])
            exist_gates[(a, w)] = c.add("and", f"and:{_word_str(a, w)}-exists", [neg, concept_gates[(Exists(r), a)]])

    match_gates = []
    for mu in relevant_mappings(tbox, q, inds, words):
        ins = []
        for k, x in enumerate(q.answer_vars, 1):
            ins.append(c.inputs[f"in:x{k}={mu[x][0]}"])
        for z in q.counting_vars:
            if mu[z][1]:
                ins.append(exist_gates[mu[z]])

        def elem(t):
            return mu[t] if q.is_var(t) else (t, ())

        for atom in q.atoms:
            if isinstance(atom, RoleAtom):
                (a1, w1), (a2, w2) = elem(atom.subject), elem(atom.object)
                if not w1 and not w2:
                    ins.append(c.inputs[f"in:{atom.role}({a1},{a2})"])
            else:
                a, w = elem(atom.term)
                if not w:
                    ins.append(concept_gates[(Atomic(atom.concept), a)])
        name = ",".join(f"{v}->{_word_str(*mu[v])}" for v in q.variables if v in mu)
        match_gates.append(c.add("and", f"and:match[{name}]", list(dict.fromkeys(ins))))
    c.meta["mappings"] = len(match_gates)

    ge_gates = []
    for k in range(k_max + 1):
        t = c.add("threshold", f"T{k}:count>={k}", match_gates, k)
        ins = []
        for j, b in enumerate(bits):
            if (k >> j) & 1:
                ins.append(b)
            else:
                ins.append(c.add("not", f"not:b{j}", [b]))
        eq = c.add("and", f"and:m={k}", ins)
        ge_gates.append(c.add("and", f"and:count>=m@{k}", [t, eq]))
    c.output = c.add("or", "or:output", ge_gates)
    return c


def encode_input(circuit: Circuit, abox, tup, m: int) -> dict:
    """Assignment gate-id -> bool for an ABox over the circuit's individuals."""
    inds = set(circuit.individuals)
    # bit width and arity are read off the input labels so loaded circuits work too
    n_bits = sum(1 for lab in circuit.inputs if lab[3:4] == "b" and lab[4:].isdigit())
    arity = len({lab.split("=")[0] for lab in circuit.inputs if lab.startswith("in:x") and "=" in lab})
    if m < 0 or m >= 2 ** n_bits:
        raise CircuitError(f"m={m} not representable in {n_bits} bits")
    tup = tuple(tup)
    if len(tup) != arity:
        raise CircuitError("answer tuple has the wrong arity")
    on = set()
    for ax in abox:
        if isinstance(ax, ConceptAssertion):
            names = (ax.individual,)
            label = f"in:{ax.concept}({ax.individual})"
        else:
            names = (ax.subject, ax.object)
            label = f"in:{ax.role}({ax.subject},{ax.object})"
        if not set(names) <= inds:
            raise CircuitError(f"assertion {ax} uses individuals outside the circuit")
        if label not in circuit.inputs:
            raise CircuitError(f"assertion {ax} outside the circuit vocabulary")
        on.add(label)
    for k, a in enumerate(tup, 1):
        if a not in inds:
            raise CircuitError(f"answer individual {a!r} outside the circuit")
        on.add(f"in:x{k}={a}")
    for j in range(n_bits):
        if (m >> j) & 1:
            on.add(f"in:b{j}")
    return {gid: label in on for label, gid in circuit.inputs.items()}


def evaluate_circuit(circuit: Circuit, assignment: dict) -> bool:
    val: dict = {}
    for g in circuit.gates.values():
        if g.kind == "input":
            if g.id not in assignment:
                raise CircuitError(f"missing input {g.label}")
            val[g.id] = bool(assignment[g.id])
        elif g.kind == "and":
            val[g.id] = all(val[i] for i in g.inputs)
        elif g.kind == "or":
            val[g.id] = any(val[i] for i in g.inputs)
        elif g.kind == "not":
            val[g.id] = not val[g.inputs[0]]
        else:
            val[g.id] = sum(val[i] for i in g.inputs) >= g.k
    return val[circuit.output]


def abox_vocabulary(circuit: Circuit) -> list:
    """Every assertion the circuit has an input gate for."""
    facts = []
    for label in circuit.inputs:
        body = label[3:]
        if body.startswith("x") and "=" in body or (body[0] == "b" and body[1:].isdigit()):
            continue
        name, args = body[:-1].split("(")
        parts = args.split(",")
        facts.append(ConceptAssertion(name, parts[0]) if len(parts) == 1 else RoleAssertion(name, *parts))
    return facts


def all_aboxes(circuit: Circuit):
    """Every ABox over the circuit's input vocabulary (exponential; tiny circuits only)."""
    facts = abox_vocabulary(circuit)
    for bits in product((0, 1), repeat=len(facts)):
        yield [f for f, b in zip(facts, bits) if b]


def direct_decision(tbox, q: CountingQuery, individuals, abox, tup, m: int) -> bool:
    from .certain_answers import exhaustive_rooted_core_lower
    from .kb_core import is_satisfiable

    kb = make_kb(tbox, abox, "core", individuals)
    if not is_satisfiable(kb):
        return True
    return exhaustive_rooted_core_lower(kb, q, tup) >= m


# ------------------------------------------------------------- PP paths

@dataclass(frozen=True)
class PathCount:
    accepting: int
    total: int
    branch: int

    def __post_init__(self):
        if not (0 <= self.accepting <= self.total) or self.total <= 0:
            raise ValueError(f"inconsistent path count {self.accepting}/{self.total}")

    def majority(self) -> bool:
        return 2 * self.accepting > self.total


def pp_closed_form(n_c: int, m: int, c: int) -> PathCount:
    if c < 1:
        raise ValueError("needs at least one mapping")
    if not 0 <= n_c <= c:
        raise ValueError("c-match count must lie in [0, C]")
    if m < 1:
        raise ValueError("threshold m must be positive")
    if 2 * m >= c + 2:
        return PathCount(n_c * c, c * (2 * m - 2), 1)
    return PathCount(c * (c - 2 * m + n_c + 2), c * (2 * c - 2 * m + 2), 2)


def simulate_pp_paths(kb, q: CountingQuery, tup, m: int) -> PathCount:
    """Count machine paths by walking every guessed mapping and integer."""
    from .canonical_model import canonical_restricted
    from .certain_answers import is_exhaustive_rooted
    from .kb_core import require_satisfiable
    from .query_model import enumerate_matches

    if kb.dialect != "core" or not is_exhaustive_rooted(q):
        raise QueryError("path simulation needs DL-Lite_core and an exhaustive rooted query")
    if m < 1:
        raise ValueError("threshold m must be positive")
    require_satisfiable(kb)
    words = query_words(kb.tbox, q)
    inds = list(kb.individuals)
    can = canonical_restricted(kb, q)
    matches = {tuple(sorted((v, str(e)) for v, e in mt.assignment)) for mt in enumerate_matches(q, can, tup)}
    elements = [".".join([a] + [str(r) for r in w]) for a in inds for w in words]
    variables = list(q.variables)
    c = len(elements) ** len(variables)
    accepting = total = 0
    branch = 1 if 2 * m >= c + 2 else 2
    for combo in product(elements, repeat=len(variables)):
        is_match = tuple(sorted(zip(variables, combo))) in matches
        if branch == 1:
            span = 2 * m - 2
            good = min(span, c) if is_match else 0
        else:
            span = 2 * c - 2 * m + 2
            good = span if is_match else c - 2 * m + 2
        accepting += good
        total += span
    return PathCount(accepting, total, branch)
