"""Query execution: locate a candidate pool, rerank by true distance.

A query runs in three phases. Encoding the query into per-table codes is
deliberately left outside both timers (reported curves exclude coding cost).
The locate phase collects up to P candidate ids from the index under one
monotonic-clock window; the scan phase gathers those candidates' true
feature vectors, computes squared Euclidean distances, and sorts out the
top K under a second window. `brute_force` runs the same scan over the
whole base and is the exactness oracle: with P = n, `search` must return
identical ids, tie handling included.

Distances accumulate in float64, left to right over dimensions. Ties are
broken by smaller item id so results are fully deterministic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hashlane.core import (
    BinaryCode,
    CodeSet,
    FeatureSet,
    HashlaneError,
    SearchParams,
    _readonly,
)
from hashlane.encoders import LinearEncoderModel, encode
from hashlane.index import MultiTableIndex, locate


@dataclass(frozen=True)
class QueryResult:
    """Top-K answer for one query plus its phase timings."""

    ids: np.ndarray
    distances: np.ndarray
    locate_ns: int
    scan_ns: int
    final_radius: int
    pool_size_used: int


def squared_distances(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from `query` to every row.

    Accumulates in float64 one dimension at a time, left to right, so a
    scalar recomputation in the same order reproduces every value exactly.
    """
    rows = np.asarray(rows, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    acc = np.zeros(rows.shape[0], dtype=np.float64)
    for j in range(rows.shape[1]):
        diff = rows[:, j] - query[j]
        acc += diff * diff
    return acc


def _top_k(ids: np.ndarray, dists: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """K smallest by (distance, id): full deterministic order, ties to the
    smaller item id."""
    order = np.lexsort((ids, dists))[:k]
    return ids[order], dists[order]


def _check_query(base: FeatureSet, query: np.ndarray, k: int) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != base.dim:
        raise HashlaneError(
            "dimension-mismatch",
            f"query has dimension {q.shape[0]}, base has {base.dim}",
        )
    if k > base.count:
        raise HashlaneError("bad-argument", f"top_k {k} exceeds base size {base.count}")
    return q


def encode_query(
    models: Sequence[LinearEncoderModel], query: np.ndarray
) -> list[BinaryCode]:
    """Per-table codes for one query vector (untimed by design)."""
    if not models:
        raise HashlaneError("bad-argument", "no encoder models supplied for the query")
    return [encode(m, query) for m in models]


def search(
    index: MultiTableIndex,
    base: FeatureSet,
    query: np.ndarray,
    params: SearchParams,
    models: Sequence[LinearEncoderModel] | None = None,
    query_codes: Sequence[BinaryCode] | CodeSet | None = None,
) -> QueryResult:
    """Hash-index search: locate ≤ pool_size candidates, scan, return top-K.

    Query codes come either from `query_codes` (one per table; used when
    codes are assigned by labels rather than computed from the vector) or by
    encoding `query` with `models` (defaulting to the index's own models).
    """
    q = _check_query(base, query, params.top_k)
    if base.count != index.count:
        raise HashlaneError(
            "bad-argument",
            f"index holds {index.count} items but base has {base.count}",
        )
    if query_codes is None:
        query_codes = encode_query(models if models is not None else index.models, q)
    base64 = base.values64  # materialize the float64 view outside the timers

    t0 = time.perf_counter_ns()
    located = locate(index, query_codes, params.pool_size)
    t1 = time.perf_counter_ns()
    pool = located.candidate_ids
    dists = squared_distances(base64[pool], q)
    ids, dists = _top_k(pool.astype(np.uint32), dists, params.top_k)
    t2 = time.perf_counter_ns()

    return QueryResult(
        ids=_readonly(ids),
        distances=_readonly(dists),
        locate_ns=t1 - t0,
        scan_ns=t2 - t1,
        final_radius=located.final_radius,
        pool_size_used=int(pool.shape[0]),
    )


def brute_force(base: FeatureSet, query: np.ndarray, k: int) -> QueryResult:
    """Exact K nearest neighbours by a full scan; locate_ns is zero.

    Same distance accumulation and tie rule as `search`, so hash-index
    results converge to these ids exactly as the pool grows to n.
    """
    q = _check_query(base, query, k)
    base64 = base.values64

    t0 = time.perf_counter_ns()
    dists = squared_distances(base64, q)
    all_ids = np.arange(base.count, dtype=np.uint32)
    ids, dists = _top_k(all_ids, dists, k)
    t1 = time.perf_counter_ns()

    return QueryResult(
        ids=_readonly(ids),
        distances=_readonly(dists),
        locate_ns=0,
        scan_ns=t1 - t0,
        final_radius=0,
        pool_size_used=base.count,
    )
