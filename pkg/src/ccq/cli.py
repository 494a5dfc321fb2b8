"""Batch command-line front end.

Exit status: 0 when the verb decides true or succeeds, 1 when it decides
false, 2 on bad input or when an answer cannot be certified.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import certain_answers as ca
from . import circuits, reductions
from .canonical_model import generate_canonical
from .kb_core import Finite, KBError, UnsatisfiableKB, format_kb, is_satisfiable, parse_kb, tbox_depth
from .query_model import QueryError, count_cmatches, format_query, parse_query

VERBS = ("check-sat", "canon", "certain-cq", "count", "decide-interval", "best-bound", "interleave",
         "build-circuit", "eval-circuit", "pp-sim", "gen-reduction")


class CliError(Exception):
    pass


def _fmt_bound(x) -> str:
    return "inf" if x == ca.INF else str(int(x))


def _parse_upper(text: str):
    return ca.INF if text.lower() in ("inf", "+inf", "infinity") else int(text)


class _Out:
    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream

    def emit(self, text: str, **record):
        if self.fmt == "json-lines":
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")
        else:
            self.stream.write(text + "\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


def _load_kb(path: str):
    return parse_kb(_read(path))


def _load_query(path: str, kb):
    return parse_query(_read(path), kb.individuals)


def _tuple(args) -> tuple:
    return tuple(t for t in (args.tuple or "").split(",") if t)


def _config(args) -> ca.SearchConfig:
    return ca.SearchConfig(desk_cap=args.desk_cap, depth=args.depth)


def _canonical_depth(kb, q, args) -> int:
    if args.depth is not None:
        return args.depth
    d = tbox_depth(kb.tbox)
    if isinstance(d, Finite):
        return d.n
    if q is None:
        raise CliError("infinite-depth TBox: pass --depth")
    return 2 * len(q) + 4


def _bool_result(out: _Out, verb: str, value: bool, **extra) -> int:
    out.emit("true" if value else "false", verb=verb, result=value, **extra)
    return 0 if value else 1


# ------------------------------------------------------------------ verbs

def cmd_check_sat(args, out):
    kb = _load_kb(args.kb)
    sat = is_satisfiable(kb)
    out.emit("satisfiable" if sat else "unsatisfiable", verb="check-sat", result=sat)
    return 0 if sat else 1


def cmd_canon(args, out):
    kb = _load_kb(args.kb)
    depth = _canonical_depth(kb, None, args)
    can, truncated = generate_canonical(kb, depth)
    if out.fmt == "json-lines":
        out.emit("", verb="canon", depth=depth, truncated=truncated, size=len(can.domain),
                 domain=[str(e) for e in can.domain])
    else:
        out.stream.write(can.dump())
        out.emit(f"# depth {depth} size {len(can.domain)} truncated {str(truncated).lower()}")
    return 0


def cmd_certain_cq(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    return _bool_result(out, "certain-cq", ca.certain_cq(kb, q, _tuple(args), _config(args)))


def cmd_count(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    kb = ca._with_query_constants(kb, q)
    can, _ = generate_canonical(kb, _canonical_depth(kb, q, args))
    n = count_cmatches(q, can, _tuple(args))
    out.emit(str(n), verb="count", result=n)
    return 0


def cmd_decide_interval(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    upper = _parse_upper(args.upper)
    ok = ca.decide_interval(kb, q, _tuple(args), args.lower, upper, _config(args))
    interval = f"[{args.lower}, {_fmt_bound(upper)}]"
    out.emit(f"{interval} {'true' if ok else 'false'}", verb="decide-interval", interval=interval, result=ok)
    return 0 if ok else 1


def cmd_best_bound(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    n = ca.best_lower_bound(kb, q, _tuple(args), _config(args))
    out.emit(str(n), verb="best-bound", result=n)
    return 0


def cmd_interleave(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    tup = _tuple(args)
    kb = ca._with_query_constants(kb, q)
    size = len(kb.individuals) + args.desk_cap
    _, model = ca.minimal_model_bounded(kb, q, tup, size, _config(args).node_limit)
    inter = ca.build_interleaving(model, kb, q, tup, depth=args.depth)
    reduced = ca.build_reduced_interleaving(inter, kb, q, tup)
    reports = [("original", count_cmatches(q, model, tup), True, model), (inter.construction, inter.cmatch_count,
               inter.is_model, inter.model), (reduced.construction, reduced.cmatch_count, reduced.is_model, reduced.model)]
    for name, count, is_model, interp in reports:
        if args.dump and out.fmt == "text":
            out.stream.write(interp.dump())
        out.emit(f"{name} {count}", verb="interleave", construction=name, count=count, is_model=is_model,
                 size=len(interp.domain))
    return 0


def cmd_build_circuit(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    individuals = tuple(args.individuals.split(",")) if args.individuals else None
    circ = circuits.build_tc0_circuit(kb.tbox, q, args.ell, individuals)
    text = circ.to_dot() if args.dot else circ.dumps()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.stream.write(text)
    m = circ.meta
    out.emit(f"# gates {len(circ.gates)} depth {circ.depth()} bits {m['bits']} mappings {m['mappings']}",
             verb="build-circuit", gates=len(circ.gates), depth=circ.depth(), bits=m["bits"],
             mappings=m["mappings"])
    return 0


def cmd_eval_circuit(args, out):
    circ = circuits.Circuit.loads(_read(args.circuit))
    kb = _load_kb(args.abox)
    assignment = circuits.encode_input(circ, kb.abox, _tuple(args), args.m)
    return _bool_result(out, "eval-circuit", circuits.evaluate_circuit(circ, assignment))


def cmd_pp_sim(args, out):
    kb = _load_kb(args.kb)
    q = _load_query(args.query, kb)
    pc = circuits.simulate_pp_paths(kb, q, _tuple(args), args.m)
    out.emit(f"{pc.accepting}/{pc.total} branch {pc.branch} {'accept' if pc.majority() else 'reject'}",
             verb="pp-sim", accepting=pc.accepting, total=pc.total, branch=pc.branch, result=pc.majority())
    return 0 if pc.majority() else 1


def _parse_cnf(text: str) -> list:
    clauses = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or line[0] in "cp":  # DIMACS comment and header lines
            continue
        lits = [int(x) for x in line.split() if x != "0"]
        if lits:
            clauses.append(tuple(lits))
    return clauses


def _parse_tiling(text: str):
    n, colors, hor, ver = None, [], set(), set()
    for line in text.splitlines():
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        key, rest = parts[0], parts[1:]
        if key == "n":
            n = int(rest[0])
        elif key == "colors":
            colors.extend(rest)
        elif key in ("H", "V") and len(rest) == 2:
            (hor if key == "H" else ver).add(tuple(rest))
        else:
            raise CliError(f"bad tiling line {line!r}")
    if n is None:
        raise CliError("tiling file needs an `n` line")
    return n, colors, hor, ver


def cmd_gen_reduction(args, out):
    kind = args.kind
    if kind in ("3col", "3col-x", "dp"):
        if not args.graph:
            raise CliError(f"--graph is required for {kind}")
        g1 = reductions.Graph.parse(_read(args.graph))
        if kind == "3col":
            inst = reductions.gen_3col_rooted(g1)
        elif kind == "3col-x":
            inst = reductions.gen_3col_exhaustive(g1)
        else:
            if not args.graph2:
                raise CliError("--graph2 is required for dp")
            inst = reductions.gen_dp_pair(g1, reductions.Graph.parse(_read(args.graph2)), args.mode)
    elif kind == "pp":
        if not args.cnf or args.threshold is None:
            raise CliError("--cnf and --threshold are required for pp")
        inst = reductions.gen_cnf_pp(_parse_cnf(_read(args.cnf)), args.threshold)
    else:
        if not args.tiling:
            raise CliError("--tiling is required for tiling")
        inst = reductions.gen_tiling(*_parse_tiling(_read(args.tiling)))
    prefix = Path(args.out)
    files = {".kb": format_kb(inst.kb), ".q": format_query(inst.query) + "\n",
             ".expected": f"threshold {inst.threshold}\n{inst.expected_equivalence}\n"}
    for suffix, text in files.items():
        Path(str(prefix) + suffix).write_text(text, encoding="utf-8")
    out.emit(f"wrote {prefix}.kb {prefix}.q {prefix}.expected threshold {inst.threshold}",
             verb="gen-reduction", kind=kind, threshold=inst.threshold, prefix=str(prefix))
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=None, help="canonical-model depth override")
    common.add_argument("--desk-cap", type=int, default=ca.DEFAULT_CONFIG.desk_cap,
                        help="extra domain elements allowed in model search")
    common.add_argument("--format", choices=("text", "json-lines"), default="text")
    common.add_argument("--tuple", default="", help="answer tuple, comma separated")

    p = argparse.ArgumentParser(prog="ccq", description="Counting conjunctive queries over DL-Lite KBs.")
    sub = p.add_subparsers(dest="verb", metavar="VERB")
    sub.required = True

    def verb(name, fn, *positional, help=None):
        sp = sub.add_parser(name, parents=[common], help=help)
        for arg in positional:
            sp.add_argument(arg)
        sp.set_defaults(fn=fn)
        return sp

    verb("check-sat", cmd_check_sat, "kb", help="satisfiability check")
    verb("canon", cmd_canon, "kb", help="dump the (truncated) canonical model")
    verb("certain-cq", cmd_certain_cq, "kb", "query", help="certain answer of the plain CQ")
    verb("count", cmd_count, "kb", "query", help="c-matches on the canonical model")
    sp = verb("decide-interval", cmd_decide_interval, "kb", "query", help="decide a certain interval")
    sp.add_argument("--lower", type=int, default=0)
    sp.add_argument("--upper", default="inf")
    verb("best-bound", cmd_best_bound, "kb", "query", help="best certain lower bound")
    sp = verb("interleave", cmd_interleave, "kb", "query", help="countermodel constructions")
    sp.add_argument("--dump", action="store_true")
    sp = verb("build-circuit", cmd_build_circuit, "kb", "query", help="threshold circuit for a TBox and query")
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--individuals", default="")
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("--dot", action="store_true")
    sp = verb("eval-circuit", cmd_eval_circuit, "circuit", "abox", help="evaluate a circuit on an ABox")
    sp.add_argument("--m", type=int, required=True)
    sp = verb("pp-sim", cmd_pp_sim, "kb", "query", help="majority path simulation")
    sp.add_argument("--m", type=int, required=True)
    sp = verb("gen-reduction", cmd_gen_reduction, help="emit a reduction instance")
    sp.add_argument("--kind", choices=("3col", "3col-x", "dp", "pp", "tiling"), required=True)
    sp.add_argument("--graph")
    sp.add_argument("--graph2")
    sp.add_argument("--mode", choices=("rooted", "count", "cntd"), default="rooted")
    sp.add_argument("--cnf")
    sp.add_argument("--threshold", type=int)
    sp.add_argument("--tiling")
    sp.add_argument("--out", required=True)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    out = _Out(args.format, stdout)
    try:
        return args.fn(args, out)
    except ca.Uncertified as e:
        stderr.write(f"uncertified: {e}\n")
        return 2
    except (CliError, KBError, QueryError, UnsatisfiableKB, circuits.CircuitError,
            reductions.ReductionError, ValueError) as e:
        stderr.write(f"error: {e}\n")
        return 2


def main():
    sys.exit(run())
