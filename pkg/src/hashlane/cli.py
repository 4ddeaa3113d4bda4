"""Command-line pipeline: gen, train, encode, build, bench, oracle, stats.

Each subcommand reads and validates every input file before writing anything,
writes its declared outputs, and exits 0 only when those outputs are fully
written. Failures print one machine-parsable line to stderr:

    error: <kind>: <message>

Flags can come from a `key=value` config file via --config; flags given on
the command line win over config-file values. The default output root for
bench runs is the HASHLANE_OUT environment variable when set.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from hashlane.bench import brute_force_record, emit_csv, run_sweep, write_run_dir
from hashlane.core import HashlaneError
from hashlane.datagen import gaussian_clusters
from hashlane.encoders import (
    KIND_CRC,
    CrcModel,
    LinearEncoderModel,
    encode_features,
    encode_labels,
    train_crc,
    train_isoh,
    train_lsh,
)
from hashlane.formats import (
    read_codes,
    read_features,
    read_index,
    read_label_file,
    read_model,
    write_codes,
    write_features,
    write_index,
    write_model,
)
from hashlane.index import MultiTableIndex, bucket_stats, build_table


@dataclass(frozen=True)
class RunConfig:
    """Resolved knobs for a bench run, echoed into the run directory."""

    features: str
    queries: str
    index: str
    models: tuple[str, ...]
    predictions: str | None
    out_dir: str
    method: str
    bits: int
    tables: int
    seed: int
    k: int
    pools: tuple[int, ...]

    def as_dict(self) -> dict:
        d = {
            "features": self.features,
            "queries": self.queries,
            "index": self.index,
            "models": ";".join(self.models),
            "method": self.method,
            "bits": self.bits,
            "tables": self.tables,
            "seed": self.seed,
            "k": self.k,
            "pools": ",".join(str(p) for p in self.pools),
        }
        if self.predictions:
            d["predictions"] = self.predictions
        return d


def _parse_pools(text: str) -> list[int]:
    try:
        pools = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise HashlaneError("bad-argument", f"pools must be comma-separated integers, got {text!r}")
    if not pools:
        raise HashlaneError("bad-argument", "pools list is empty")
    return pools


def _table_path(out: str, t: int, tables: int) -> Path:
    """Per-table output path: the plain path for one table, stem.tNN.ext
    for several."""
    p = Path(out)
    if tables == 1:
        return p
    return p.with_name(f"{p.stem}.t{t:02d}{p.suffix}")


def cmd_gen(args) -> int:
    if args.queries > 0 and not args.queries_out:
        raise HashlaneError("bad-argument", "--queries needs --queries-out for the query file")
    base, queries = gaussian_clusters(
        args.clusters, args.per_cluster, args.dim, args.spread, args.seed,
        queries_per_cluster=args.queries,
    )
    write_features(args.out, base)
    if queries is not None:
        write_features(args.queries_out, queries)
    return 0


def cmd_train(args) -> int:
    if args.method == "crc":
        if args.classes is not None:
            classes = args.classes
        else:
            if not args.features:
                raise HashlaneError(
                    "bad-argument", "train crc needs --classes or a labeled --features file"
                )
            labels = read_features(args.features).require_labels("training set")
            classes = int(labels.max()) + 1
        for t in range(args.tables):
            write_model(_table_path(args.out, t, args.tables), train_crc(classes, args.bits, args.seed + t))
        return 0
    if not args.features:
        raise HashlaneError("bad-argument", f"train {args.method} needs --features")
    features = read_features(args.features)
    train = train_lsh if args.method == "lsh" else train_isoh
    for t in range(args.tables):
        model = train(features, args.bits, args.seed + t)
        write_model(_table_path(args.out, t, args.tables), model)
    return 0


def cmd_encode(args) -> int:
    model = read_model(args.model)
    features = read_features(args.features)
    if isinstance(model, LinearEncoderModel):
        codes = encode_features(model, features)
    else:
        if args.predictions:
            labels = read_label_file(args.predictions)
            if labels.shape[0] != features.count:
                raise HashlaneError(
                    "length-mismatch",
                    f"{labels.shape[0]} predicted labels for {features.count} items",
                )
        else:
            labels = features.require_labels("feature set")
        codes = encode_labels(model, labels)
    write_codes(args.out, codes)
    return 0


def cmd_build(args) -> int:
    code_sets = [read_codes(p) for p in args.codes]
    index = MultiTableIndex(tables=tuple(build_table(c) for c in code_sets))
    write_index(args.out, index)
    return 0


def _load_bench_inputs(args):
    base = read_features(args.features)
    queries = read_features(args.queries)
    index = read_index(args.index)
    models = [read_model(p) for p in args.models]
    if len(models) != index.table_count:
        raise HashlaneError(
            "bad-argument",
            f"index has {index.table_count} tables but {len(models)} models were given",
        )
    kinds = {m.kind if isinstance(m, LinearEncoderModel) else KIND_CRC for m in models}
    if len(kinds) != 1:
        raise HashlaneError("bad-argument", "all per-table models must share one method")
    method = kinds.pop()
    for m in models:
        if m.length != index.length:
            raise HashlaneError("length-mismatch", "model code length differs from index")
        if isinstance(m, LinearEncoderModel) and m.dim != base.dim:
            raise HashlaneError("dimension-mismatch", "model dimension differs from features")
    return base, queries, index, models, method


def cmd_bench(args) -> int:
    pools = _parse_pools(args.pools)
    base, queries, index, models, method = _load_bench_inputs(args)

    query_codes = None
    if method == KIND_CRC:
        if not args.predictions:
            raise HashlaneError(
                "bad-argument", "bench with class-coded models needs --predictions"
            )
        predicted = read_label_file(args.predictions)
        if predicted.shape[0] != queries.count:
            raise HashlaneError(
                "length-mismatch",
                f"{predicted.shape[0]} predicted labels for {queries.count} queries",
            )
        query_codes = [encode_labels(m, predicted) for m in models]
        models_arg = None
    else:
        models_arg = models

    out_root = args.out_dir or os.environ.get("HASHLANE_OUT", "hashlane-out")
    config = RunConfig(
        features=args.features,
        queries=args.queries,
        index=args.index,
        models=tuple(args.models),
        predictions=args.predictions,
        out_dir=str(out_root),
        method=method,
        bits=index.length,
        tables=index.table_count,
        seed=min(m.seed for m in models),
        k=args.k,
        pools=tuple(pools),
    )
    records, histograms = run_sweep(
        index,
        base,
        queries,
        args.k,
        pools,
        models=models_arg,
        query_codes=query_codes,
        method=method,
        workers=args.parallel,
    )
    run_dir = write_run_dir(out_root, config.as_dict(), records, histograms)
    print(run_dir)
    return 0


def cmd_oracle(args) -> int:
    base = read_features(args.features)
    queries = read_features(args.queries)
    record = brute_force_record(base, queries, args.k)
    text = emit_csv([record])
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_stats(args) -> int:
    if args.index:
        index = read_index(args.index)
        tables = index.tables
    else:
        tables = (build_table(read_codes(args.codes)),)
    for t, table in enumerate(tables):
        s = bucket_stats(table)
        print(
            f"table {t}: items={s.item_count} non_empty_buckets={s.non_empty_buckets} "
            f"max_bucket={s.max_bucket_size} mean_bucket={s.mean_bucket_size:.3f}"
        )
        balls = " ".join(
            f"r{r}={v}" for r, v in enumerate(s.cumulative_ball_sizes)
        )
        print(f"table {t}: cumulative_buckets {balls}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hashlane",
        description="Binary-hashing search over feature sets, with a time-precision benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic labeled cluster data")
    p.add_argument("--clusters", type=int, required=True, help="number of Gaussian clusters")
    p.add_argument("--per-cluster", type=int, required=True, help="base items per cluster")
    p.add_argument("--dim", type=int, required=True, help="feature dimension")
    p.add_argument("--spread", type=float, required=True, help="cluster standard deviation")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--queries", type=int, default=0, help="query items per cluster")
    p.add_argument("--out", required=True, help="output feature file")
    p.add_argument("--queries-out", help="output query feature file")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train hash models (one per table)")
    p.add_argument("--features", help="training feature file")
    p.add_argument("--method", choices=["lsh", "isoh", "crc"], required=True)
    p.add_argument("--bits", type=int, required=True, help="code length l")
    p.add_argument("--tables", type=int, default=1, help="number of tables T")
    p.add_argument("--seed", type=int, default=0, help="base seed; table t uses seed+t")
    p.add_argument("--classes", type=int, help="class count for crc (default: from labels)")
    p.add_argument("--out", required=True, help="model file (stem.tNN.ext when tables > 1)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode a feature file with a trained model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--predictions", help="labels-only file for class-coded query encoding")
    p.add_argument("--out", required=True, help="output code file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build", help="build a multi-table index from code files")
    p.add_argument("--codes", nargs="+", required=True, help="one code file per table")
    p.add_argument("--out", required=True, help="output index file")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("bench", help="run a time-precision sweep over pool sizes")
    p.add_argument("--features", required=True, help="base feature file (labeled)")
    p.add_argument("--queries", required=True, help="query feature file (labeled)")
    p.add_argument("--index", required=True, help="index file")
    p.add_argument("--models", nargs="+", required=True, help="one model file per table")
    p.add_argument("--predictions", help="labels-only file with predicted query labels (crc)")
    p.add_argument("--k", type=int, required=True, help="neighbours returned per query")
    p.add_argument("--pools", required=True, help="comma-separated ascending pool sizes")
    p.add_argument("--out-dir", help="output root (default: $HASHLANE_OUT or ./hashlane-out)")
    p.add_argument("--parallel", type=int, default=1, help="query shards; timings not comparable to sequential")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="brute-force precision/time reference")
    p.add_argument("--features", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("stats", help="bucket occupancy of an index or code file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--index")
    group.add_argument("--codes")
    p.set_defaults(func=cmd_stats)

    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Splice --config key=value pairs in as flags, placed so that flags
    typed on the command line override them."""
    out = list(argv)
    for i, tok in enumerate(out):
        if tok == "--config" or tok.startswith("--config="):
            if tok == "--config":
                if i + 1 >= len(out):
                    raise HashlaneError("bad-argument", "--config needs a file path")
                path, span = out[i + 1], 2
            else:
                path, span = tok.split("=", 1)[1], 1
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise HashlaneError("unreadable", f"{path}: {exc}") from exc
            injected = []
            for line_no, line in enumerate(text.splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise HashlaneError(
                        "bad-argument", f"{path}:{line_no}: expected key=value, got {line!r}"
                    )
                key, value = line.split("=", 1)
                injected.extend([f"--{key.strip()}", value.strip()])
            # keep the subcommand first, then config values, then real flags
            return out[:1] + injected + out[1:i] + out[i + span :]
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except HashlaneError as err:
        print(f"error: {err.kind}: {err}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except OSError as err:
        print(f"error: io-error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
