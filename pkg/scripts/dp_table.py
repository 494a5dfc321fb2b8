"""Best certain lower bounds for the DP pair reduction over triangle and K4."""
import argparse
import time

from ccq.certain_answers import SearchConfig, Uncertified, best_lower_bound
from ccq.reductions import K4, TRIANGLE, gen_dp_pair

GRAPHS = {"triangle": TRIANGLE, "K4": K4}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", choices=("rooted", "count", "cntd"), default="rooted")
    ap.add_argument("--node-limit", type=int, default=SearchConfig().node_limit)
    args = ap.parse_args()
    config = SearchConfig(node_limit=args.node_limit)
    print(f"{'G1':>9} {'G2':>9} {'expected':>8} {'found':>8} {'seconds':>8}")
    for n1, g1 in GRAPHS.items():
        for n2, g2 in GRAPHS.items():
            inst = gen_dp_pair(g1, g2, args.mode)
            start = time.perf_counter()
            try:
                found = str(best_lower_bound(inst.kb, inst.query, (), config))
            except Uncertified:
                found = "uncert."
            print(f"{n1:>9} {n2:>9} {inst.meta['expected']:>8} {found:>8} {time.perf_counter() - start:>8.1f}",
                  flush=True)


if __name__ == "__main__":
    main()
