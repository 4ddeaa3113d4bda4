"""Hash-bucket indexes and hamming-ball candidate location.

A HashTable groups item ids by their binary code. Lookup probes buckets in
expanding hamming radius around the query code: at radius r every r-subset of
bit positions is flipped (subsets enumerated in lexicographic order of their
sorted index tuples) and the resulting key probed, whether or not a bucket
exists there. With several tables the schedule is radius-major and
table-minor: radius r is completed across all tables before r+1 starts, and
ids already collected from one table are not collected again from another.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from hashlane.core import BinaryCode, CodeSet, HashlaneError, _readonly, ball_size

# Radii whose full mask table would exceed this many entries are streamed
# from a combination iterator instead of being materialized and cached.
_CACHE_LIMIT = 1 << 21
_CHUNK = 1 << 16


@lru_cache(maxsize=512)
def _masks_dense(width: int, r: int) -> np.ndarray:
    """All r-subsets of bit positions {0..width-1} as uint64 XOR masks,
    in lexicographic order of the sorted index tuples."""
    if r == 0:
        return _readonly(np.zeros(1, dtype=np.uint64))
    if r == width:
        full = (np.uint64(1) << np.uint64(width)) - np.uint64(1) if width < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
        return _readonly(np.array([full], dtype=np.uint64))
    parts = []
    for first in range(width - r + 1):
        tail = _masks_dense(width - first - 1, r - 1)
        shifted = tail << np.uint64(first + 1)
        parts.append(shifted | (np.uint64(1) << np.uint64(first)))
    return _readonly(np.concatenate(parts))


def _masks_streamed(length: int, r: int, chunk: int) -> Iterator[np.ndarray]:
    combos = itertools.combinations(range(length), r)
    one = np.uint64(1)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            return
        idx = np.array(block, dtype=np.uint64)
        yield np.bitwise_or.reduce(one << idx, axis=1)


def iter_flip_masks(length: int, r: int, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Yield the radius-r XOR masks for an `length`-bit code in lexicographic
    subset order, in arrays of at most `chunk` entries."""
    if not 0 <= r <= length:
        raise HashlaneError("bad-argument", f"radius {r} out of range for length {length}")
    if math.comb(length, r) <= _CACHE_LIMIT:
        dense = _masks_dense(length, r)
        for start in range(0, dense.shape[0], chunk):
            yield dense[start : start + chunk]
    else:
        yield from _masks_streamed(length, r, chunk)


@dataclass(frozen=True)
class HashTable:
    """Bucketed code index: every item id appears in exactly one bucket,
    keyed by the item's code.

    Stored compressed: `unique_keys` ascending, bucket b holding
    `ids[offsets[b]:offsets[b+1]]` with ids ascending inside each bucket.
    """

    length: int
    unique_keys: np.ndarray
    offsets: np.ndarray
    ids: np.ndarray
    _bucket_map: dict | None = field(default=None, repr=False, compare=False)

    @property
    def count(self) -> int:
        return int(self.ids.shape[0])

    @property
    def bucket_count(self) -> int:
        return int(self.unique_keys.shape[0])

    @property
    def buckets(self) -> dict[int, list[int]]:
        """Plain key -> id-list view of the table (built lazily)."""
        if self._bucket_map is None:
            mapping = {
                int(k): self.ids[self.offsets[b] : self.offsets[b + 1]].tolist()
                for b, k in enumerate(self.unique_keys)
            }
            object.__setattr__(self, "_bucket_map", mapping)
        return self._bucket_map


def build_table(codes: CodeSet) -> HashTable:
    """Group item ids by code. Ids inside a bucket stay ascending."""
    order = np.argsort(codes.keys, kind="stable")
    sorted_keys = codes.keys[order]
    unique_keys, starts = np.unique(sorted_keys, return_index=True)
    offsets = np.append(starts, codes.count).astype(np.int64)
    return HashTable(
        length=codes.length,
        unique_keys=_readonly(unique_keys),
        offsets=_readonly(offsets),
        ids=_readonly(order.astype(np.uint32)),
    )


@dataclass(frozen=True)
class MultiTableIndex:
    """T tables over one item universe, one encoder model per table."""

    tables: tuple[HashTable, ...]
    models: tuple = ()

    def __post_init__(self):
        if len(self.tables) < 1:
            raise HashlaneError("bad-argument", "an index needs at least one table")
        first = self.tables[0]
        for t in self.tables[1:]:
            if t.length != first.length:
                raise HashlaneError("length-mismatch", "all tables must share one code length")
            if t.count != first.count:
                raise HashlaneError("bad-argument", "all tables must index the same items")
        if self.models and len(self.models) != len(self.tables):
            raise HashlaneError("bad-argument", "need one encoder model per table")

    @property
    def table_count(self) -> int:
        return len(self.tables)

    @property
    def length(self) -> int:
        return self.tables[0].length

    @property
    def count(self) -> int:
        return self.tables[0].count


@dataclass(frozen=True)
class LocateResult:
    """Pool located for one query: unique ids in discovery order."""

    candidate_ids: np.ndarray
    final_radius: int
    buckets_visited: int


def _query_keys(index: MultiTableIndex, query_codes: Sequence[BinaryCode] | CodeSet) -> list[np.uint64]:
    if isinstance(query_codes, CodeSet):
        if query_codes.length != index.length:
            raise HashlaneError("length-mismatch", "query code length differs from index length")
        keys = [np.uint64(k) for k in query_codes.keys]
    else:
        keys = []
        for code in query_codes:
            if code.length != index.length:
                raise HashlaneError("length-mismatch", "query code length differs from index length")
            keys.append(np.uint64(code.key))
    if len(keys) != index.table_count:
        raise HashlaneError(
            "bad-argument",
            f"need one query code per table: got {len(keys)} codes for {index.table_count} tables",
        )
    return keys


def _gather_bucket_ids(table: HashTable, bucket_pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate the id lists of the buckets at `bucket_pos`, in order.
    Returns (ids, per-bucket counts)."""
    starts = table.offsets[bucket_pos]
    counts = table.offsets[bucket_pos + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.uint32), counts
    bounds = np.concatenate(([0], np.cumsum(counts)))
    flat = np.arange(total, dtype=np.int64) + np.repeat(starts - bounds[:-1], counts)
    return table.ids[flat], counts


def locate(
    index: MultiTableIndex,
    query_codes: Sequence[BinaryCode] | CodeSet,
    pool_size: int,
) -> LocateResult:
    """Collect up to `pool_size` distinct candidate ids around the query.

    Buckets are probed radius-major, table-minor; within the bucket where the
    pool crosses `pool_size`, ids are taken in stored ascending order and the
    rest discarded. Probes of empty buckets still count toward
    `buckets_visited`; buckets that a sequential prober would never reach
    (after the pool is full) do not. Stops early once every indexed item is
    in the pool, since no further probe can add a candidate.
    """
    if pool_size < 1:
        raise HashlaneError("bad-argument", f"pool size must be positive, got {pool_size}")
    keys = _query_keys(index, query_codes)
    n = index.count
    length = index.length
    target = min(pool_size, n)

    visited = np.zeros(n, dtype=bool)
    pool_parts: list[np.ndarray] = []
    pool_count = 0
    buckets_visited = 0

    for radius in range(length + 1):
        for table, qkey in zip(index.tables, keys):
            nbuckets = table.bucket_count
            for masks in iter_flip_masks(length, radius):
                probe = qkey ^ masks
                pos = np.searchsorted(table.unique_keys, probe)
                pos_c = np.minimum(pos, nbuckets - 1)
                hits = np.flatnonzero(table.unique_keys[pos_c] == probe)
                cand, counts = _gather_bucket_ids(table, pos_c[hits])
                fresh_mask = ~visited[cand]
                n_fresh = int(fresh_mask.sum())
                if pool_count + n_fresh < target:
                    fresh = cand[fresh_mask]
                    visited[fresh] = True
                    pool_parts.append(fresh)
                    pool_count += n_fresh
                    buckets_visited += masks.shape[0]
                    continue
                # the pool crosses the target inside this chunk: find the
                # bucket where that happens and charge only probes up to it
                take = target - pool_count
                fresh = cand[fresh_mask][:take]
                visited[fresh] = True
                pool_parts.append(fresh)
                pool_count = target
                bucket_of = np.repeat(np.arange(hits.shape[0]), counts)
                fresh_per_bucket = np.bincount(bucket_of[fresh_mask], minlength=hits.shape[0])
                crossing = int(np.searchsorted(np.cumsum(fresh_per_bucket), take))
                buckets_visited += int(hits[crossing]) + 1
                return LocateResult(
                    candidate_ids=_readonly(np.concatenate(pool_parts)),
                    final_radius=radius,
                    buckets_visited=buckets_visited,
                )
    # every bucket of every table probed (tiny indexes only): capped pool
    return LocateResult(
        candidate_ids=_readonly(
            np.concatenate(pool_parts) if pool_parts else np.empty(0, dtype=np.uint32)
        ),
        final_radius=length,
        buckets_visited=buckets_visited,
    )


@dataclass(frozen=True)
class BucketStats:
    """Occupancy summary of one table plus the hamming-ball growth row."""

    item_count: int
    non_empty_buckets: int
    max_bucket_size: int
    mean_bucket_size: float
    cumulative_ball_sizes: tuple[int, ...]


def bucket_stats(table: HashTable, max_radius: int = 10) -> BucketStats:
    sizes = np.diff(table.offsets)
    radii = range(min(table.length, max_radius) + 1)
    return BucketStats(
        item_count=table.count,
        non_empty_buckets=table.bucket_count,
        max_bucket_size=int(sizes.max()),
        mean_bucket_size=float(sizes.mean()),
        cumulative_ball_sizes=tuple(ball_size(table.length, r) for r in radii),
    )
