#!/usr/bin/env python3
"""Precision versus time for several table counts on clustered data.

Sweeps the candidate-pool size P for each table count and prints the
two curves side by side, then compares them at matched time budgets.
More tables find close candidates at small hamming radii, so they reach
a given precision earlier than one table probing a large ball around a
single code. Pass --out-dir (or set HASHLANE_OUT) to keep the raw CSV.
"""

import argparse

import numpy as np

from hashlane.bench import brute_force_record, run_sweep, write_run_dir
from hashlane.datagen import gaussian_clusters
from hashlane.encoders import encode_features, train_lsh
from hashlane.index import MultiTableIndex, build_table


def build_index(base, bits, tables, seed):
    models = tuple(train_lsh(base, bits, seed + t) for t in range(tables))
    return MultiTableIndex(
        tables=tuple(build_table(encode_features(m, base)) for m in models),
        models=models,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--items", type=int, default=50_000, help="base set size")
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--bits", type=int, default=24, help="code length l")
    parser.add_argument("--clusters", type=int, default=10)
    parser.add_argument("--spread", type=float, default=0.4)
    parser.add_argument("--queries", type=int, default=400, help="total query count")
    parser.add_argument("--top-k", type=int, default=10)
    parser.add_argument("--tables", type=int, nargs="+", default=[1, 4, 16])
    parser.add_argument(
        "--pools",
        default="10,20,40,80,160,320,640,1280,2560",
        help="comma-separated ascending pool sizes",
    )
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out-dir", default=None, help="also write run directories")
    args = parser.parse_args()

    schedule = [int(p) for p in args.pools.split(",")]
    base, queries = gaussian_clusters(
        args.clusters,
        args.items // args.clusters,
        args.dim,
        spread=args.spread,
        seed=args.seed,
        queries_per_cluster=max(1, args.queries // args.clusters),
    )
    print(f"base {base.count} x {base.dim}d, {queries.count} queries, l={args.bits}")

    oracle = brute_force_record(base, queries, args.top_k)
    print(
        f"brute force: precision {oracle.mean_precision:.4f}, "
        f"{oracle.total_ns / 1e6 / queries.count:.2f} ms/query"
    )

    curves = {}
    for tables in args.tables:
        index = build_index(base, args.bits, tables, args.seed + 100)
        records, histograms = run_sweep(
            index, base, queries, args.top_k, schedule, method="lsh"
        )
        curves[tables] = records
        print(f"\nT={tables}")
        print("  P      precision   ms/query   final radius histogram mass")
        for record, hist in zip(records, histograms):
            print(
                f"  {record.pool:<6d} {record.mean_precision:.4f}      "
                f"{record.total_ns / 1e6 / record.query_count:8.3f}   "
                f"{hist.total()}"
            )
        if args.out_dir:
            config = {
                "method": "lsh",
                "tables": tables,
                "bits": args.bits,
                "items": base.count,
                "seed": args.seed,
            }
            run_dir = write_run_dir(args.out_dir, config, records, histograms)
            print(f"  wrote {run_dir}")

    reference = min(args.tables)
    t_ref = np.array([r.total_ns for r in curves[reference]], dtype=float)
    p_ref = np.array([r.mean_precision for r in curves[reference]])
    order = np.argsort(t_ref)
    t_ref, p_ref = t_ref[order], p_ref[order]
    print(f"\ngain over T={reference} at matched budgets:")
    for tables in args.tables:
        if tables == reference:
            continue
        t = np.array([r.total_ns for r in curves[tables]], dtype=float)
        p = np.array([r.mean_precision for r in curves[tables]])
        keep = (t >= t_ref.min()) & (t <= t_ref.max())
        gains = p[keep] - np.interp(t[keep], t_ref, p_ref)
        if gains.size:
            print(
                f"  T={tables}: min {gains.min():+.4f}  max {gains.max():+.4f} "
                f"over {gains.size} budgets"
            )
        else:
            print(f"  T={tables}: no time overlap with T={reference}")


if __name__ == "__main__":
    main()
