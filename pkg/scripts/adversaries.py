"""Lower-bound adversaries: forced LRU misses and the three-stage segment
against a marking ensemble, each compared with its theoretical value."""
import argparse
import math

import numpy as np

from bundlecache import bounds
from bundlecache.policies import opt_offline_bruteforce
from bundlecache.workloads import deterministic_adversary, randomized_adversary_segment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--l", type=int, default=2)
    ap.add_argument("--t", type=int, default=10_000)
    ap.add_argument("--rk", type=int, default=60)
    ap.add_argument("--rh", type=int, default=40)
    ap.add_argument("--rl", type=int, default=2)
    ap.add_argument("--ensemble", type=int, default=2000)
    ap.add_argument("--segments", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    trace, log = deterministic_adversary("lru", args.k, args.l, args.t)
    opt = opt_offline_bruteforce(trace, args.k, max_states=None, max_queries=None)
    print(f"deterministic: LRU {log.total_misses}, OPT {opt}, ratio {log.total_misses / opt:.3f}"
          f" (lower bound k-l+1 = {bounds.det_lower(args.k, args.l)})")

    run = randomized_adversary_segment(args.rk, args.rh, args.rl, ensemble_size=args.ensemble,
                                       segments=args.segments, seed=args.seed)
    plan = run.plan
    print(f"randomized: m={plan.m}, stages {plan.stage_lengths}, "
          f"stage-3 lower bound {plan.stage3_lower_bound():.4f}")
    for i, per_copy in enumerate(run.stage3_per_copy, start=1):
        se = np.std(per_copy, ddof=1) / math.sqrt(len(per_copy))
        print(f"  segment {i}: stage means {tuple(round(x, 3) for x in run.stage_means[i - 1])}"
              f", stage-3 {per_copy.mean():.3f} +- {se:.3f} over {run.stage3_queries[i - 1]} queries")


if __name__ == "__main__":
    main()
