#!/usr/bin/env python3
"""How locating cost grows with the code length at a fixed pool size.

Longer codes spread the same items over exponentially more buckets, so
filling a fixed candidate pool forces the search to climb to larger
hamming radii: the number of radius-r buckets is the cumulative ball
size printed in the last column. Short codes stop at radius 0 or 1;
long codes visit thousands of mostly empty buckets per query.
"""

import argparse

from hashlane.bench import code_length_report
from hashlane.datagen import gaussian_clusters


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--items", type=int, default=50_000)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--clusters", type=int, default=10)
    parser.add_argument("--spread", type=float, default=0.4)
    parser.add_argument("--queries", type=int, default=400)
    parser.add_argument("--pool", type=int, default=100)
    parser.add_argument("--lengths", type=int, nargs="+", default=[16, 24, 32])
    parser.add_argument("--method", choices=("lsh", "isoh"), default="lsh")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    base, queries = gaussian_clusters(
        args.clusters,
        args.items // args.clusters,
        args.dim,
        spread=args.spread,
        seed=args.seed,
        queries_per_cluster=max(1, args.queries // args.clusters),
    )
    print(
        f"base {base.count} x {base.dim}d, {queries.count} queries, "
        f"P={args.pool}, {args.method}"
    )
    rows = code_length_report(
        base, queries, args.method, args.lengths, args.pool, seed=args.seed + 100
    )
    print("  l    buckets/query   mean radius   radius-0   ms/query   ball sizes r=0..4")
    for row in rows:
        balls = ",".join(str(b) for b in row.cumulative_ball_sizes[:5])
        print(
            f"  {row.bits:<4d} {row.mean_buckets_visited:13.1f}   "
            f"{row.mean_final_radius:11.2f}   {row.radius0_fraction:8.3f}   "
            f"{row.mean_locate_ns / 1e6:8.3f}   {balls}"
        )


if __name__ == "__main__":
    main()
