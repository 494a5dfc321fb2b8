"""Cross-check the 3-colouring and #SAT reductions against brute-force oracles."""
import argparse
import random

from ccq.certain_answers import decide_interval
from ccq.reductions import all_3cnfs, all_graphs, count_sat, gen_3col_rooted, gen_cnf_pp, is_3colorable


def check_graphs(max_vertices: int) -> int:
    wrong = total = 0
    for g in all_graphs(max_vertices):
        inst = gen_3col_rooted(g)
        total += 1
        if decide_interval(inst.kb, inst.query, (), inst.threshold) == is_3colorable(g):
            wrong += 1
            print("mismatch", g)
    print(f"3-colouring: {total} graphs, {wrong} mismatches")
    return wrong


def check_cnfs(n_vars: int, max_clauses: int, sample: int | None, seed: int) -> int:
    cnfs = list(all_3cnfs(n_vars, max_clauses))
    if sample is not None and sample < len(cnfs):
        cnfs = random.Random(seed).sample(cnfs, sample)
    wrong = 0
    for cnf in cnfs:
        models = count_sat(cnf)
        for n in (models, models + 1):
            inst = gen_cnf_pp(cnf, n)
            if decide_interval(inst.kb, inst.query, (), n) != (models >= n):
                wrong += 1
                print("mismatch", cnf, n)
    print(f"#SAT: {len(cnfs)} CNFs, {wrong} mismatches")
    return wrong


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-vertices", type=int, default=4)
    ap.add_argument("--vars", type=int, default=4)
    ap.add_argument("--clauses", type=int, default=3)
    ap.add_argument("--sample", type=int, default=None, help="random subset of the CNFs")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    bad = check_graphs(args.max_vertices) + check_cnfs(args.vars, args.clauses, args.sample, args.seed)
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
