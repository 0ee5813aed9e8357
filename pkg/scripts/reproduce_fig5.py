"""Cyclic adversarial trace: LRU, FF and marking miss counts."""
import argparse
import time

from bundlecache.policies import run_policy
from bundlecache.workloads import gen_cyclic_adversarial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=500)
    ap.add_argument("--l", type=int, default=10)
    ap.add_argument("--t", type=int, default=100_000)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    trace = gen_cyclic_adversarial(args.k, args.l, args.t, n=args.n)
    print(f"cycle length {args.k - args.l + 2}, {args.l - 1} fixed pages, T={args.t}")
    for policy in ("lru", "ff"):
        t0 = time.perf_counter()
        misses = run_policy(policy, trace, args.k).total_misses
        print(f"{policy:8s} {misses:7d} misses  ({time.perf_counter() - t0:.2f}s)")
    runs = [run_policy("marking", trace, args.k, seed).total_misses for seed in range(args.seeds)]
    print(f"marking  {sum(runs) / len(runs):9.1f} mean misses over {args.seeds} seeds  {runs}")


if __name__ == "__main__":
    main()
