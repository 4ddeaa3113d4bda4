"""Evaluation harness: precision@K against locate/scan time.

The central object is a sweep over the pool-size knob P: for each P every
query is searched, per-phase times are summed over queries, and label
precision@K is averaged. One BenchRecord plus one final-radius histogram
comes out per P. Reported time is locating plus scanning only; encoding
queries into codes happens before any clock starts.

Precisions are a pure function of the inputs, so re-running a sweep changes
only the *_ns fields, and growing P can only grow each query's candidate
pool (pools are prefix-nested), which is what makes precision trends
meaningful.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter_ns
from typing import Sequence

import numpy as np

from hashlane.core import CodeSet, FeatureSet, HashlaneError, SearchParams, ball_size
from hashlane.encoders import encode_features, train_isoh, train_lsh
from hashlane.index import MultiTableIndex, build_table, locate
from hashlane.search import brute_force, search

CSV_HEADER = "method,tables,bits,pool,top_k,precision,locate_ns,scan_ns,total_ns,queries"
TIMING_NOTE = "# times are locating + scanning only; query encoding is excluded"


@dataclass(frozen=True)
class BenchRecord:
    """Aggregate of one (method, P) sweep cell over all queries."""

    method: str
    tables: int
    bits: int
    pool: int
    top_k: int
    mean_precision: float
    total_locate_ns: int
    total_scan_ns: int
    total_ns: int
    query_count: int

    def __post_init__(self):
        if self.total_ns != self.total_locate_ns + self.total_scan_ns:
            raise HashlaneError("bad-value", "total_ns must equal locate + scan")
        if not 0.0 <= self.mean_precision <= 1.0:
            raise HashlaneError("bad-value", f"precision {self.mean_precision} outside [0, 1]")


@dataclass(frozen=True)
class RadiusHistogram:
    """How many queries finished locating at each hamming radius."""

    bits: int
    pool: int
    counts: dict[int, int]

    def total(self) -> int:
        return sum(self.counts.values())


def precision_at_k(result_ids, base_labels, query_label: int, k: int) -> float:
    """Fraction of the K slots filled with items sharing the query label.

    A short result list (fewer than K returned) still divides by K: the
    missing slots count as irrelevant.
    """
    if base_labels is None:
        raise HashlaneError("missing-labels", "precision needs base labels")
    if k < 1:
        raise HashlaneError("bad-argument", "k must be positive")
    ids = np.asarray(result_ids)
    if ids.shape[0] > k:
        raise HashlaneError("bad-argument", f"{ids.shape[0]} results for k={k}")
    base_labels = np.asarray(base_labels)
    hits = int((base_labels[ids] == query_label).sum())
    return hits / k


def _query_code_matrix(
    index: MultiTableIndex,
    queries: FeatureSet,
    models: Sequence | None,
    query_codes: Sequence[CodeSet] | None,
) -> np.ndarray:
    """(n_q, T) uint64 matrix of per-table query codes, computed untimed."""
    if query_codes is not None:
        if len(query_codes) != index.table_count:
            raise HashlaneError(
                "bad-argument",
                f"need one query CodeSet per table: got {len(query_codes)} for {index.table_count}",
            )
        for cs in query_codes:
            if cs.length != index.length:
                raise HashlaneError("length-mismatch", "query codes disagree with index length")
            if cs.count != queries.count:
                raise HashlaneError("bad-argument", "query code count differs from query count")
        return np.stack([cs.keys for cs in query_codes], axis=1)
    models = models if models is not None else index.models
    if not models:
        raise HashlaneError("bad-argument", "no encoder models and no explicit query codes")
    return np.stack(
        [encode_features(m, queries).keys for m in models], axis=1
    )


def _run_queries(index, base, queries, code_matrix, params, indices):
    """Sequential timed pass over the given query indices."""
    locate_ns = 0
    scan_ns = 0
    precisions = np.empty(len(indices))
    radii = []
    base_labels = base.labels
    query_labels = queries.labels
    length = index.length
    for row, qi in enumerate(indices):
        res = search(
            index,
            base,
            queries.values64[qi],
            params,
            query_codes=CodeSet(code_matrix[qi], length),
        )
        locate_ns += res.locate_ns
        scan_ns += res.scan_ns
        precisions[row] = precision_at_k(res.ids, base_labels, int(query_labels[qi]), params.top_k)
        radii.append(res.final_radius)
    return locate_ns, scan_ns, precisions, radii


def run_sweep(
    index: MultiTableIndex,
    base: FeatureSet,
    queries: FeatureSet,
    top_k: int,
    pool_schedule: Sequence[int],
    *,
    models: Sequence | None = None,
    query_codes: Sequence[CodeSet] | None = None,
    method: str = "lsh",
    warmup_fraction: float = 0.01,
    workers: int = 1,
) -> tuple[list[BenchRecord], list[RadiusHistogram]]:
    """Time-precision sweep over the pool sizes in `pool_schedule`.

    Queries run sequentially by default so per-query clock windows never
    interleave. With workers > 1 queries are sharded across threads, each
    shard timed on its own clock and the totals summed; those times are not
    comparable to sequential runs and exist for bulk precision checks.
    """
    schedule = list(pool_schedule)
    if not schedule:
        raise HashlaneError("bad-argument", "pool schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise HashlaneError("bad-argument", "pool schedule must be strictly ascending")
    if top_k > schedule[0]:
        raise HashlaneError(
            "bad-argument",
            f"top_k {top_k} exceeds the smallest pool {schedule[0]}",
        )
    if workers < 1:
        raise HashlaneError("bad-argument", "workers must be positive")
    base.require_labels("base set")
    queries.require_labels("query set")

    code_matrix = _query_code_matrix(index, queries, models, query_codes)
    base.values64  # materialize the scan-side float64 view before any clock
    n_q = queries.count
    warm = max(1, int(n_q * warmup_fraction))

    records: list[BenchRecord] = []
    histograms: list[RadiusHistogram] = []
    for pool in schedule:
        params = SearchParams(pool_size=pool, top_k=top_k)
        _run_queries(index, base, queries, code_matrix, params, range(warm))

        if workers == 1:
            shards = [range(n_q)]
        else:
            bounds = np.linspace(0, n_q, workers + 1).astype(int)
            shards = [range(bounds[w], bounds[w + 1]) for w in range(workers)]
            shards = [s for s in shards if len(s)]
        if len(shards) == 1:
            outputs = [_run_queries(index, base, queries, code_matrix, params, shards[0])]
        else:
            with ThreadPoolExecutor(max_workers=len(shards)) as pool_exec:
                futures = [
                    pool_exec.submit(_run_queries, index, base, queries, code_matrix, params, s)
                    for s in shards
                ]
                outputs = [f.result() for f in futures]

        locate_ns = sum(o[0] for o in outputs)
        scan_ns = sum(o[1] for o in outputs)
        precisions = np.concatenate([o[2] for o in outputs])
        radius_counts = Counter()
        for o in outputs:
            radius_counts.update(o[3])

        records.append(
            BenchRecord(
                method=method,
                tables=index.table_count,
                bits=index.length,
                pool=pool,
                top_k=top_k,
                mean_precision=float(precisions.mean()),
                total_locate_ns=locate_ns,
                total_scan_ns=scan_ns,
                total_ns=locate_ns + scan_ns,
                query_count=n_q,
            )
        )
        histograms.append(
            RadiusHistogram(bits=index.length, pool=pool, counts=dict(sorted(radius_counts.items())))
        )
    return records, histograms


def brute_force_record(base: FeatureSet, queries: FeatureSet, top_k: int) -> BenchRecord:
    """Full-scan reference point: the precision ceiling and its cost."""
    base.require_labels("base set")
    queries.require_labels("query set")
    base.values64
    scan_ns = 0
    precisions = np.empty(queries.count)
    for qi in range(queries.count):
        res = brute_force(base, queries.values64[qi], top_k)
        scan_ns += res.scan_ns
        precisions[qi] = precision_at_k(res.ids, base.labels, int(queries.labels[qi]), top_k)
    return BenchRecord(
        method="bruteforce",
        tables=0,
        bits=0,
        pool=base.count,
        top_k=top_k,
        mean_precision=float(precisions.mean()),
        total_locate_ns=0,
        total_scan_ns=scan_ns,
        total_ns=scan_ns,
        query_count=queries.count,
    )


def default_pool_schedule(top_k: int, n: int) -> list[int]:
    """Geometric grid K, 2K, 4K, ... capped at n."""
    if top_k < 1 or n < 1:
        raise HashlaneError("bad-argument", "top_k and n must be positive")
    out = []
    p = top_k
    while p < n:
        out.append(p)
        p *= 2
    out.append(n)
    return out


@dataclass(frozen=True)
class CodeLengthRow:
    """Locating cost of one code length at fixed P (the bucket-growth table)."""

    bits: int
    mean_buckets_visited: float
    mean_final_radius: float
    radius0_fraction: float
    cumulative_ball_sizes: tuple[int, ...]
    mean_locate_ns: float


_TRAINERS = {"lsh": train_lsh, "isoh": train_isoh}


def code_length_report(
    base: FeatureSet,
    queries: FeatureSet,
    kind: str,
    lengths: Sequence[int],
    pool_size: int,
    *,
    seed: int = 0,
    tables: int = 1,
) -> list[CodeLengthRow]:
    """How locating cost grows with code length, all else fixed.

    Geometric encoders only: codes for label-coded methods do not depend on
    a length-vs-cost tradeoff in the same way (class count fixes the bucket
    structure), so they are out of scope here.
    """
    if kind not in _TRAINERS:
        raise HashlaneError("bad-argument", f"code length report supports lsh or isoh, not {kind!r}")
    if pool_size < 1:
        raise HashlaneError("bad-argument", "pool_size must be positive")
    train = _TRAINERS[kind]
    rows = []
    for length in lengths:
        models = [train(base, length, seed + t) for t in range(tables)]
        index = MultiTableIndex(
            tables=tuple(build_table(encode_features(m, base)) for m in models),
            models=tuple(models),
        )
        code_matrix = np.stack([encode_features(m, queries).keys for m in models], axis=1)
        visited = np.empty(queries.count)
        radii = np.empty(queries.count)
        locate_ns = 0
        for qi in range(queries.count):
            codes = CodeSet(code_matrix[qi], length)
            t0 = perf_counter_ns()
            res = locate(index, codes, pool_size)
            locate_ns += perf_counter_ns() - t0
            visited[qi] = res.buckets_visited
            radii[qi] = res.final_radius
        rows.append(
            CodeLengthRow(
                bits=length,
                mean_buckets_visited=float(visited.mean()),
                mean_final_radius=float(radii.mean()),
                radius0_fraction=float((radii == 0).mean()),
                cumulative_ball_sizes=tuple(ball_size(length, r) for r in range(5)),
                mean_locate_ns=locate_ns / queries.count,
            )
        )
    return rows


def emit_csv(records: Sequence[BenchRecord]) -> str:
    """Records as CSV text: fixed header, %.6f precision, integer times."""
    if not records:
        raise HashlaneError("bad-argument", "no records to emit")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.method},{r.tables},{r.bits},{r.pool},{r.top_k},"
            f"{r.mean_precision:.6f},{r.total_locate_ns},{r.total_scan_ns},"
            f"{r.total_ns},{r.query_count}"
        )
    return "\n".join(lines) + "\n"


def emit_radius_csv(histograms: Sequence[RadiusHistogram]) -> str:
    if not histograms:
        raise HashlaneError("bad-argument", "no histograms to emit")
    lines = ["bits,pool,radius,count"]
    for h in histograms:
        for radius, count in sorted(h.counts.items()):
            lines.append(f"{h.bits},{h.pool},{radius},{count}")
    return "\n".join(lines) + "\n"


def write_run_dir(
    out_root,
    config: dict,
    records: Sequence[BenchRecord],
    histograms: Sequence[RadiusHistogram] | None = None,
) -> Path:
    """Write bench outputs under a directory named by the config hash.

    The timing-honesty note goes in as a '#' comment line here, on top of
    the plain CSV payload, so the emitters themselves stay byte-stable.
    """
    items = sorted((str(k), str(v)) for k, v in config.items())
    digest = hashlib.sha256("\n".join(f"{k}={v}" for k, v in items).encode()).hexdigest()
    run_dir = Path(out_root) / f"run-{digest[:12]}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "bench.csv").write_text(TIMING_NOTE + "\n" + emit_csv(records))
    if histograms:
        (run_dir / "radius.csv").write_text(emit_radius_csv(histograms))
    (run_dir / "config.txt").write_text("".join(f"{k}={v}\n" for k, v in items))
    return run_dir
