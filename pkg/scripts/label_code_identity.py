#!/usr/bin/env python3
"""Search precision equals classifier accuracy under label codes.

Base items are coded by their true class, queries by a stub predictor
of known accuracy. With equal class sizes and the pool set to the class
size, every query pools exactly its predicted class, so precision@K is
1 for a correct prediction and 0 for a wrong one, and the mean over
queries lands on the predictor's accuracy.
"""

import argparse

from hashlane.bench import run_sweep
from hashlane.datagen import corrupt_labels, gaussian_clusters
from hashlane.encoders import encode_labels, train_crc
from hashlane.index import MultiTableIndex, bucket_stats, build_table


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--per-class", type=int, default=600)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--bits", type=int, default=16)
    parser.add_argument("--queries", type=int, default=500)
    parser.add_argument("--top-k", type=int, default=10)
    parser.add_argument(
        "--accuracies", type=float, nargs="+", default=[0.5, 0.7, 0.9, 1.0]
    )
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    base, queries = gaussian_clusters(
        args.classes,
        args.per_class,
        args.dim,
        spread=0.25,
        seed=args.seed,
        queries_per_cluster=max(1, args.queries // args.classes),
    )
    model = train_crc(args.classes, args.bits, seed=args.seed + 1)
    index = MultiTableIndex(tables=(build_table(encode_labels(model, base.labels)),))
    stats = bucket_stats(index.tables[0])
    print(
        f"{base.count} items in {stats.non_empty_buckets} buckets "
        f"(one per class), {queries.count} queries, P={args.per_class}"
    )
    print("  accuracy   precision@{}".format(args.top_k))
    for i, accuracy in enumerate(args.accuracies):
        predicted = corrupt_labels(queries.labels, accuracy, args.classes, seed=args.seed + 2 + i)
        codes = encode_labels(model, predicted)
        records, _ = run_sweep(
            index,
            base,
            queries,
            args.top_k,
            [args.per_class],
            query_codes=[codes],
            method="crc",
        )
        print(f"  {accuracy:<10.3f} {records[0].mean_precision:.4f}")


if __name__ == "__main__":
    main()
