"""Generators for the hardness reductions, plus brute-force source-problem oracles."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

from .kb_core import (
    Atomic,
    Axiom,
    ConceptAssertion,
    Exists,
    KnowledgeBase,
    Role,
    RoleAssertion,
    make_kb,
)
from .query_model import ConceptAtom, CountingQuery, RoleAtom


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    edges: tuple  # ordered pairs; orientation is kept for the Edge assertions

    def __post_init__(self):
        vs = tuple(dict.fromkeys(self.vertices))
        seen, es = set(), []
        for u, v in self.edges:
            if u not in vs or v not in vs:
                raise ReductionError(f"edge {(u, v)} uses an undeclared vertex")
            key = frozenset((u, v))
            if key not in seen:
                seen.add(key)
                es.append((u, v))
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", tuple(es))

    @classmethod
    def complete(cls, n: int, prefix: str = "u") -> "Graph":
        vs = [f"{prefix}{i}" for i in range(1, n + 1)]
        return cls(tuple(vs), tuple(combinations(vs, 2)))

    @classmethod
    def parse(cls, text: str) -> "Graph":
        """``vertices a b c`` then one ``u v`` edge per line."""
        vs, es = [], []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "vertices":
                vs.extend(parts[1:])
            elif len(parts) == 2:
                es.append((parts[0], parts[1]))
                vs.extend(p for p in parts if p not in vs)
            else:
                raise ReductionError(f"bad graph line {line!r}")
        return cls(tuple(vs), tuple(es))


TRIANGLE = Graph.complete(3)
K4 = Graph.complete(4)


def all_graphs(max_vertices: int):
    """Every labelled graph on 0..max_vertices vertices named u1, u2, ..."""
    for n in range(max_vertices + 1):
        vs = tuple(f"u{i}" for i in range(1, n + 1))
        pairs = list(combinations(vs, 2))
        for bits in product((0, 1), repeat=len(pairs)):
            yield Graph(vs, tuple(p for p, b in zip(pairs, bits) if b))


def is_3colorable(g: Graph) -> bool:
    for colors in product(range(3), repeat=len(g.vertices)):
        col = dict(zip(g.vertices, colors))
        if all(col[u] != col[v] for u, v in g.edges):
            return True
    return False


def is_planar(g: Graph) -> bool:
    import networkx as nx

    h = nx.Graph()
    h.add_nodes_from(g.vertices)
    h.add_edges_from(g.edges)
    return nx.check_planarity(h)[0]


@dataclass
class ReductionInstance:
    kb: KnowledgeBase
    query: CountingQuery
    answer_tuple: tuple
    threshold: int
    expected_equivalence: str
    meta: dict = field(default_factory=dict)


def _ci(lhs, rhs) -> Axiom:
    return Axiom(lhs, rhs)


def _ex(name: str, inverted: bool = False) -> Exists:
    return Exists(Role(name, inverted))


def _r(role: str, s: str, o: str) -> RoleAssertion:
    return RoleAssertion(role, s, o)


def _vname(u: str, tag: str = "") -> str:
    return f"v_{u}{tag}"


# --------------------------------------------------------------- 3-coloring

def _color_abox(g: Graph, tag: str = "", root: str = "a"):
    av = f"a_v{tag}"
    abox = [_r("Vertex", root, _vname(u, tag)) for u in g.vertices]
    abox += [_r("Edge", _vname(u, tag), _vname(v, tag)) for u, v in g.edges]
    abox += [_r("Vertex", root, av), _r("Edge", av, av)]
    abox += [_r("HasCol", av, f"{c}{tag}") for c in "rgb"]
    return abox


def _q_edge(root: str, tag: str, counting_color: bool = False, color_role: str = "HasCol"):
    z1, z2, yc = f"z1{tag}", f"z2{tag}", (f"zc{tag}" if counting_color else f"yc{tag}")
    atoms = [RoleAtom("Vertex", root, z1), RoleAtom("Vertex", root, z2), RoleAtom("Edge", z1, z2),
             RoleAtom(color_role, z1, yc), RoleAtom(color_role, z2, yc)]
    return atoms, [yc], [z1, z2]


def _q_col(root: str, tag: str, role: str = "HasCol", counting_vertex: bool = False):
    y, z = (f"zv{tag}" if counting_vertex else f"y{tag}"), f"z{tag}"
    return [RoleAtom("Vertex", root, y), RoleAtom(role, y, z)], [y], [z]


def gen_3col_rooted(g: Graph) -> ReductionInstance:
    tbox = [_ci(_ex("Vertex", True), _ex("HasCol"))]
    kb = make_kb(tbox, _color_abox(g), "core", ["a"])
    ea, ey, ez = _q_edge("a", "")
    ca, cy, cz = _q_col("a", "")
    q = CountingQuery((), tuple(ey + cy), tuple(ez + cz), tuple(ea + ca), "q3col")
    return ReductionInstance(kb, q, (), 4, "certain at [4, inf] iff the graph is not 3-colorable",
                             {"baseline": 3, "kind": "3col"})


def gen_3col_exhaustive(g: Graph) -> ReductionInstance:
    tbox = [_ci(_ex("Vertex", True), _ex("HasCol")), Axiom(Role("HasCol"), Role("Colors"))]
    av = "a_v"
    abox = [_r("Vertex", "a", _vname(u)) for u in g.vertices]
    abox += [_r("Edge", _vname(u), _vname(v)) for u, v in g.edges]
    abox += [_r("Vertex", "a", av), _r("Edge", av, av), _r("HasCol", av, "r")]
    abox += [_r("Colors", _vname(u), c) for c in "rgb" for u in g.vertices]
    kb = make_kb(tbox, abox, "R", ["a"])
    ea, ey, ez = _q_edge("a", "", counting_color=True)
    ca, cy, cz = _q_col("a", "", role="Colors", counting_vertex=True)
    q = CountingQuery((), (), tuple(ey + ez + cy + cz), tuple(ea + ca), "q3colx")
    n = len(g.vertices)
    return ReductionInstance(kb, q, (), 3 * n + 2,
                             "certain at [3|V|+2, inf] iff the graph is not 3-colorable",
                             {"baseline": 3 * n + 1, "kind": "3col-x"})


# ----------------------------------------------------------------- DP pairs

def gen_dp_pair(g1: Graph, g2: Graph, mode: str = "rooted") -> ReductionInstance:
    if mode == "rooted":
        return _dp_rooted(g1, g2)
    if mode == "count":
        return _dp_count(g1, g2)
    if mode == "cntd":
        return _dp_cntd(g1, g2)
    raise ReductionError(f"unknown DP mode {mode!r}")


_DP_TABLE = {(True, True): 27, (True, False): 36, (False, True): 48, (False, False): 64}
_DP_CNTD_TABLE = {(True, True): 9, (True, False): 10, (False, True): 11, (False, False): 12}


def dp_expected(g1: Graph, g2: Graph, mode: str = "rooted") -> int:
    key = (is_3colorable(g1), is_3colorable(g2))
    return (_DP_CNTD_TABLE if mode == "cntd" else _DP_TABLE)[key]


def _dp_rooted(g1: Graph, g2: Graph) -> ReductionInstance:
    tbox = [_ci(_ex("Vertex", True), _ex("HasCol"))]
    abox = _color_abox(g1, "_1", "a_1") + _color_abox(g2, "_2", "a_2")
    kb = make_kb(tbox, abox, "core", ["a_1", "a_2"])
    atoms, ex, cnt = [], [], []
    for root, tag, parts in (("a_1", "_0", ("col",)), ("a_1", "_1", ("col", "edge")), ("a_2", "_2", ("col", "edge"))):
        if "col" in parts:
            a, y, z = _q_col(root, tag)
            atoms += a; ex += y; cnt += z
        if "edge" in parts:
            a, y, z = _q_edge(root, tag)
            atoms += a; ex += y; cnt += z
    q = CountingQuery((), tuple(ex), tuple(cnt), tuple(atoms), "qdp")
    return ReductionInstance(kb, q, (), 36, "best bound 36 iff G1 is 3-colorable and G2 is not",
                             {"expected": dp_expected(g1, g2), "kind": "dp", "mode": "rooted"})


def _dp_count(g1: Graph, g2: Graph) -> ReductionInstance:
    tbox = []
    abox = []
    for i, g in ((1, g1), (2, g2)):
        tag = f"_{i}"
        tbox += [_ci(Atomic(f"Vertex{tag}"), _ex(f"HasCol{tag}")),
                 _ci(_ex(f"HasCol{tag}", True), Atomic(f"Color{tag}"))]
        av = f"a_v{tag}"
        abox += [ConceptAssertion(f"Vertex{tag}", _vname(u, tag)) for u in g.vertices]
        abox += [_r("Edge", _vname(u, tag), _vname(v, tag)) for u, v in g.edges]
        abox += [_r("Edge", av, av), _r(f"HasCol{tag}", av, f"r{tag}")]
        abox += [ConceptAssertion(f"Color{tag}", f"{c}{tag}") for c in "rgb"]
    kb = make_kb(tbox, abox, "core")
    atoms, cnt = [ConceptAtom("Color_1", "z_0")], ["z_0"]
    for i in (1, 2):
        tag = f"_{i}"
        z1, z2, zc = f"z1{tag}", f"z2{tag}", f"zc{tag}"
        atoms += [ConceptAtom(f"Color{tag}", f"z{tag}"), RoleAtom("Edge", z1, z2),
                  RoleAtom(f"HasCol{tag}", z1, zc), RoleAtom(f"HasCol{tag}", z2, zc)]
        cnt += [f"z{tag}", z1, z2, zc]
    q = CountingQuery((), (), tuple(cnt), tuple(atoms), "qdpcount")
    return ReductionInstance(kb, q, (), 36, "best bound 36 iff G1 is 3-colorable and G2 is not",
                             {"expected": dp_expected(g1, g2), "kind": "dp", "mode": "count"})


def _dp_cntd(g1: Graph, g2: Graph) -> ReductionInstance:
    graphs = {0: g1, 1: g1, 2: g2}
    verts = {i: [_vname(u, f"_{i}") for u in g.vertices] for i, g in graphs.items()}
    every = [v for i in range(3) for v in verts[i]]
    abox = [ConceptAssertion("Vertex", v) for v in every]
    for i, g in graphs.items():
        abox += [_r("Edge", _vname(u, f"_{i}"), _vname(v, f"_{i}")) for u, v in g.edges]
    abox += [_r("Edge", x, x) for x in ("a_0", "a_1", "a_2", "c", "d")]
    for i in range(3):
        for j in range(3):
            if i != j:
                abox += [_r("Diff", u, v) for u in verts[i] for v in verts[j]]
                abox += [_r("Diff", u, f"a_{i}") for u in verts[j]]
    abox += [_r("Diff", x, x) for x in ("a_0", "a_1", "a_2", "c", "e")]
    abox += [_r("Aux_e", x, x) for x in ("a_0", "a_1", "a_2", "d")]
    abox += [_r("Aux_e", "e", u) for u in every] + [_r("Aux_e", u, "c") for u in every]
    abox += [_r("Aux_d", x, x) for x in ("a_0", "a_1", "a_2", "e")]
    abox += [_r("Aux_d", "d", u) for u in every] + [_r("Aux_d", u, "c") for u in every]
    abox += [_r("HasCol", f"a_{i}", f"{c}_{i}") for i in range(3) for c in "rgb"]
    abox += [_r("HasCol", "c", "r")] + [_r("HasCol", x, c) for x in ("d", "e") for c in "rgb"]
    kb = make_kb([_ci(Atomic("Vertex"), _ex("HasCol"))], abox, "core")
    atoms = [
        RoleAtom("Aux_d", "y", "yd1"), RoleAtom("Diff", "yd1", "yd2"),
        RoleAtom("HasCol", "yd1", "ydc"), RoleAtom("HasCol", "yd2", "ydc"),
        RoleAtom("Aux_e", "y", "ye1"), RoleAtom("Edge", "ye1", "ye2"),
        RoleAtom("HasCol", "ye1", "yec"), RoleAtom("HasCol", "ye2", "yec"),
        RoleAtom("HasCol", "y", "z"),
    ]
    q = CountingQuery((), ("y", "yd1", "yd2", "ydc", "ye1", "ye2", "yec"), ("z",), tuple(atoms), "qdpcntd")
    return ReductionInstance(kb, q, (), 10, "certain at [10, inf] iff G1 is 3-colorable and G2 is not",
                             {"expected": dp_expected(g1, g2, "cntd"), "kind": "dp", "mode": "cntd"})


# ---------------------------------------------------------------- #SAT / PP

def _check_cnf(clauses) -> list:
    out = []
    for cl in clauses:
        cl = tuple(int(x) for x in cl)
        if len(cl) != 3 or 0 in cl or len({abs(x) for x in cl}) != 3:
            raise ReductionError(f"clause {cl} is not a 3-clause over distinct variables")
        out.append(cl)
    return out


def cnf_variables(clauses) -> list:
    return sorted({abs(x) for cl in clauses for x in cl})


def count_sat(clauses) -> int:
    """Satisfying assignments over the variables occurring in the clauses."""
    clauses = _check_cnf(clauses)
    vs = cnf_variables(clauses)
    n = 0
    for bits in product((False, True), repeat=len(vs)):
        val = dict(zip(vs, bits))
        if all(any(val[abs(x)] == (x > 0) for x in cl) for cl in clauses):
            n += 1
    return n


def clause_models(clause) -> list:
    """The 7 satisfying assignments of a 3-clause, in binary order."""
    out = []
    for bits in product((False, True), repeat=3):
        if any(b == (x > 0) for b, x in zip(bits, clause)):
            out.append(bits)
    return out


def gen_cnf_pp(clauses, n_threshold: int) -> ReductionInstance:
    clauses = _check_cnf(clauses)
    abox, atoms = [], []
    for k, cl in enumerate(clauses, 1):
        for p, bits in enumerate(clause_models(cl), 1):
            xi = f"xi_{k}_{p}"
            abox.append(_r(f"Clause_{k}", "a", xi))
            for i, b in enumerate(bits, 1):
                abox.append(_r(f"Asn_{i}", xi, "true" if b else "false"))
        atoms.append(RoleAtom(f"Clause_{k}", "a", f"z_xi_{k}"))
        for i, lit in enumerate(cl, 1):
            atoms.append(RoleAtom(f"Asn_{i}", f"z_xi_{k}", f"z_u{abs(lit)}"))
    kb = make_kb([], abox, "core", ["a"])
    counting = [f"z_xi_{k}" for k in range(1, len(clauses) + 1)] + [f"z_u{v}" for v in cnf_variables(clauses)]
    q = CountingQuery((), (), tuple(counting), tuple(atoms), "qpsi")
    return ReductionInstance(kb, q, (), n_threshold, "certain at [N, inf] iff the CNF has at least N models",
                             {"kind": "pp", "models": count_sat(clauses)})


def all_3cnfs(n_vars: int, max_clauses: int):
    lits = []
    for trip in combinations(range(1, n_vars + 1), 3):
        for signs in product((1, -1), repeat=3):
            lits.append(tuple(s * v for s, v in zip(signs, trip)))
    for m in range(1, max_clauses + 1):
        yield from combinations(lits, m)


# ------------------------------------------------------------------ tiling

def _h(i, b):
    return f"H{i}_{b}"


def _v(i, b):
    return f"V{i}_{b}"


def gen_tiling(n: int, colors, horizontal, vertical) -> ReductionInstance:
    if n < 1:
        raise ReductionError("grid exponent n must be at least 1")
    colors = list(dict.fromkeys(colors))
    horizontal = {tuple(p) for p in horizontal}
    vertical = {tuple(p) for p in vertical}
    cname = {c: f"col_{c}" for c in colors}
    tbox = []
    for b in (0, 1):
        tbox.append(_ci(_ex("Roots", True), _ex(_h(n, b))))
    for i in range(2, n + 1):
        for b, b2 in product((0, 1), repeat=2):
            tbox.append(_ci(_ex(_h(i, b), True), _ex(_h(i - 1, b2))))
            tbox.append(_ci(_ex(_v(i, b), True), _ex(_v(i - 1, b2))))
    for b, b2 in product((0, 1), repeat=2):
        tbox.append(_ci(_ex(_h(1, b), True), _ex(_v(n, b2))))
    for b in (0, 1):
        tbox.append(_ci(_ex(_v(1, b), True), _ex("HasCol")))
    for b in (0, 1):
        for i in range(1, n + 1):
            tbox.append(_ci(_ex(_h(i, b), True), _ex(f"HasBit_{b}")))
            tbox.append(_ci(_ex(_v(i, b), True), _ex(f"HasBit_{b}")))
    for b in (0, 1):
        for i in range(1, n + 1):
            tbox.append(Axiom(Role(_h(i, b)), Role("HV")))
            tbox.append(Axiom(Role(_v(i, b)), Role("HV")))
        tbox.append(Axiom(Role(f"HasBit_{b}"), Role("HasBit")))

    abox = [_r("Roots", "a", "b"), _r("Roots", "a", "d"), _r("HV", "b", "b"),
            _r("HasBit_0", "d", "zero"), _r("HasBit_1", "d", "one")]
    for b in (0, 1):
        for k in range(1, n + 1):
            abox += [_r(_h(k, b), "d", "d"), _r(_v(k, b), "d", "d")]
    abox += [_r("HasCol", "d", cname[c]) for c in colors]
    kb = make_kb(tbox, abox, "R", ["a", "b", "d", "zero", "one"] + [cname[c] for c in colors])

    atoms, ex, cnt = [], [], []

    def chain(tag, last_role, target):
        ys = [f"y{i}_{tag}" for i in range(2 * n + 1)]
        atoms.append(RoleAtom("Roots", "a", ys[0]))
        atoms.extend(RoleAtom("HV", ys[i], ys[i + 1]) for i in range(2 * n))
        atoms.append(RoleAtom(last_role, ys[-1], target))
        ex.extend(ys)
        cnt.append(target)

    chain("col", "HasCol", "z_col")
    chain("b0", "HasBit_0", "z_b0")
    chain("b1", "HasBit_1", "z_b1")

    subqueries = 0
    for direction, allowed in (("V", vertical), ("H", horizontal)):
        for c1, c2 in product(colors, repeat=2):
            if (c1, c2) in allowed:
                continue
            for k in range(1, n + 1):
                _adjacency(direction, k, n, cname[c1], cname[c2], atoms, ex, cnt)
                subqueries += 1
    q = CountingQuery((), tuple(ex), tuple(cnt), tuple(atoms), "qtiling")
    p = len(colors)
    return ReductionInstance(kb, q, (), p + 1, "certain at [p+1, inf] iff no valid tiling exists",
                             {"kind": "tiling", "adjacency_subqueries": subqueries, "colors": p})


def _adjacency(direction, k, n, left_color, right_color, atoms, ex, cnt):
    tag = f"{direction}{k}_{left_color}_{right_color}"
    z = f"z_{tag}"
    yl = [f"yl{i}_{tag}" for i in range(1, 2 * n + 1)]
    yr = [f"yr{i}_{tag}" for i in range(1, 2 * n + 1)]
    atoms += [RoleAtom("Roots", "a", z), RoleAtom("HV", z, yl[0]), RoleAtom("HV", z, yr[0])]
    for i in range(2 * n - 1):
        atoms += [RoleAtom("HV", yl[i], yl[i + 1]), RoleAtom("HV", yr[i], yr[i + 1])]
    atoms += [RoleAtom("HasCol", yl[-1], left_color), RoleAtom("HasCol", yr[-1], right_color)]
    if direction == "V":
        diff, tail = n + k, range(n + k + 1, 2 * n + 1)
        shared = range(1, n + k)
    else:
        diff, tail = k, range(k + 1, n + 1)
        shared = list(range(1, k)) + list(range(n + 1, 2 * n + 1))
    ys = []
    for i in shared:
        s = f"ys{i}_{tag}"
        ys.append(s)
        atoms += [RoleAtom("HasBit", yl[i - 1], s), RoleAtom("HasBit", yr[i - 1], s)]
    atoms += [RoleAtom("HasBit", yl[diff - 1], "zero"), RoleAtom("HasBit", yr[diff - 1], "one")]
    for i in tail:
        atoms += [RoleAtom("HasBit", yl[i - 1], "one"), RoleAtom("HasBit", yr[i - 1], "zero")]
    ex += yl + yr + ys
    cnt.append(z)


def tiling_exists(n: int, colors, horizontal, vertical) -> bool:
    return find_tiling(n, colors, horizontal, vertical) is not None


def tiling_countermodel(inst: ReductionInstance, n: int, tau: dict):
    """Fold the canonical model along a tiling ``tau[(h, v)] -> color``.

    Bit witnesses land on ``zero``/``one`` and each leaf colour witness on the
    tile colour at the leaf's grid position.  For a valid tiling the result
    is a model with exactly p c-matches.
    """
    from .canonical_model import DomainElement, generate_canonical

    can, _ = generate_canonical(inst.kb, 2 * n + 1)

    def fold(e: DomainElement):
        if e.is_individual:
            return e
        last = e.suffix[-1].name
        if last.startswith("HasBit_"):
            return DomainElement("zero" if last.endswith("0") else "one")
        if last == "HasCol":
            bits = [int(r.name[-1]) for r in e.suffix[:-1]]
            h = int("".join(map(str, bits[:n])), 2)
            v = int("".join(map(str, bits[n:2 * n])), 2)
            return DomainElement(f"col_{tau[h, v]}")
        return e

    return can.image(fold)


def find_tiling(n: int, colors, horizontal, vertical):
    size = 2 ** n
    horizontal = {tuple(p) for p in horizontal}
    vertical = {tuple(p) for p in vertical}
    cells = [(h, v) for h in range(size) for v in range(size)]
    for assign in product(list(colors), repeat=len(cells)):
        tau = dict(zip(cells, assign))
        if all((tau[h, v], tau[h + 1, v]) in horizontal for h in range(size - 1) for v in range(size)) and \
           all((tau[h, v], tau[h, v + 1]) in vertical for h in range(size) for v in range(size - 1)):
            return tau
    return None
