"""Core domain types: feature sets, packed binary codes, hamming arithmetic.

Bit layout is fixed once and used everywhere: bit j of a code lives in byte
j // 8 at bit position j % 8 (little-endian within the byte), so a whole code
of up to 64 bits is also the integer ``int.from_bytes(bits, "little")``.
Unused padding bits in the last byte are always zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MAX_CODE_LENGTH = 64


class HashlaneError(ValueError):
    """Domain error carrying a stable machine-readable kind string."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class FormatError(HashlaneError):
    """Malformed or truncated artifact file."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def code_nbytes(length: int) -> int:
    return (length + 7) // 8


def _check_length(length: int) -> None:
    if not 1 <= length <= MAX_CODE_LENGTH:
        raise HashlaneError(
            "bad-argument",
            f"code length must be in 1..{MAX_CODE_LENGTH}, got {length}",
        )


@dataclass(frozen=True)
class BinaryCode:
    """A packed l-bit code, 1 <= l <= 64.

    Two codes compare equal iff their lengths and all semantic bits match;
    the zero-padding invariant makes byte equality sufficient.
    """

    bits: bytes
    length: int

    def __post_init__(self):
        _check_length(self.length)
        nb = code_nbytes(self.length)
        if len(self.bits) != nb:
            raise HashlaneError(
                "bad-argument",
                f"expected {nb} bytes for a {self.length}-bit code, got {len(self.bits)}",
            )
        if self.key >> self.length:
            raise HashlaneError("bad-value", "padding bits beyond code length must be zero")

    @classmethod
    def from_key(cls, key: int, length: int) -> "BinaryCode":
        _check_length(length)
        if key < 0 or key >> length:
            raise HashlaneError("bad-value", f"key {key} does not fit in {length} bits")
        return cls(int(key).to_bytes(code_nbytes(length), "little"), length)

    @property
    def key(self) -> int:
        """The code as a single integer, bit j at position j."""
        return int.from_bytes(self.bits, "little")

    def bit(self, j: int) -> int:
        if not 0 <= j < self.length:
            raise HashlaneError("bad-argument", f"bit index {j} out of range for length {self.length}")
        return (self.key >> j) & 1

    def to_bools(self) -> list[bool]:
        k = self.key
        return [bool((k >> j) & 1) for j in range(self.length)]

    def __str__(self) -> str:
        # MSB-first bit string, e.g. "0101" for bits (1,0,1,0) at j=0..3
        return format(self.key, f"0{self.length}b")


def pack_bits(bools: Sequence[bool]) -> BinaryCode:
    """Pack a boolean sequence into a BinaryCode; bools[j] becomes bit j."""
    length = len(bools)
    _check_length(length)
    key = 0
    for j, b in enumerate(bools):
        if b:
            key |= 1 << j
    return BinaryCode.from_key(key, length)


def hamming_distance(a: BinaryCode, b: BinaryCode) -> int:
    """Number of differing bit positions; requires equal lengths."""
    if a.length != b.length:
        raise HashlaneError(
            "length-mismatch",
            f"cannot compare codes of length {a.length} and {b.length}",
        )
    return (a.key ^ b.key).bit_count()


def ball_size(length: int, radius: int) -> int:
    """Count of distinct codes within hamming radius `radius` of any fixed
    l-bit code: sum of C(l, i) for i = 0..radius, computed exactly."""
    if length < 0:
        raise HashlaneError("bad-argument", f"code length must be non-negative, got {length}")
    if radius < 0 or radius > length:
        raise HashlaneError("bad-argument", f"radius must be in 0..{length}, got {radius}")
    return sum(math.comb(length, i) for i in range(radius + 1))


@dataclass(frozen=True)
class FeatureSet:
    """n real-valued vectors of dimension d (float32 storage, row-major)
    with optional per-item integer class labels."""

    values: np.ndarray
    labels: np.ndarray | None = None
    _values64: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise HashlaneError("bad-argument", f"values must be a non-empty 2-d matrix, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise HashlaneError("bad-value", "feature values must all be finite")
        object.__setattr__(self, "values", _readonly(v))
        if self.labels is not None:
            lab = np.ascontiguousarray(self.labels, dtype=np.int32)
            if lab.shape != (v.shape[0],):
                raise HashlaneError(
                    "bad-argument",
                    f"labels must have length {v.shape[0]}, got shape {lab.shape}",
                )
            if (lab < 0).any():
                raise HashlaneError("bad-value", "labels must be non-negative class ids")
            object.__setattr__(self, "labels", _readonly(lab))

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def values64(self) -> np.ndarray:
        """Cached float64 view of the features (projection math runs in f64)."""
        if self._values64 is None:
            object.__setattr__(self, "_values64", _readonly(self.values.astype(np.float64)))
        return self._values64

    def require_labels(self, what: str = "feature set") -> np.ndarray:
        if self.labels is None:
            raise HashlaneError("missing-labels", f"missing labels: {what} carries no class labels")
        return self.labels


@dataclass(frozen=True)
class CodeSet:
    """n codes of one shared length l, index-aligned with a FeatureSet.

    Stored as a uint64 key per item (bit j of the code = bit j of the key),
    which is exactly the packed little-endian byte layout read as an integer.
    """

    keys: np.ndarray
    length: int

    def __post_init__(self):
        _check_length(self.length)
        k = np.ascontiguousarray(self.keys, dtype=np.uint64)
        if k.ndim != 1 or k.shape[0] < 1:
            raise HashlaneError("bad-argument", "a CodeSet needs at least one code")
        if self.length < 64 and (k >> np.uint64(self.length)).any():
            raise HashlaneError("bad-value", "code keys exceed the declared bit length")
        object.__setattr__(self, "keys", _readonly(k))

    @property
    def count(self) -> int:
        return self.keys.shape[0]

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i: int) -> BinaryCode:
        return BinaryCode.from_key(int(self.keys[i]), self.length)

    def __iter__(self) -> Iterator[BinaryCode]:
        for i in range(self.count):
            yield self[i]

    @property
    def codes(self) -> list[BinaryCode]:
        return list(self)

    @classmethod
    def from_codes(cls, codes: Sequence[BinaryCode]) -> "CodeSet":
        if not codes:
            raise HashlaneError("bad-argument", "a CodeSet needs at least one code")
        length = codes[0].length
        for c in codes:
            if c.length != length:
                raise HashlaneError("length-mismatch", "all codes in a CodeSet must share one length")
        return cls(np.array([c.key for c in codes], dtype=np.uint64), length)

    def packed_bytes(self) -> np.ndarray:
        """(n, ceil(l/8)) uint8 matrix in the canonical bit layout."""
        nb = code_nbytes(self.length)
        raw = self.keys.astype("<u8").view(np.uint8).reshape(self.count, 8)
        return np.ascontiguousarray(raw[:, :nb])

    @classmethod
    def from_packed_bytes(cls, packed: np.ndarray, length: int) -> "CodeSet":
        _check_length(length)
        nb = code_nbytes(length)
        packed = np.ascontiguousarray(packed, dtype=np.uint8)
        if packed.ndim != 2 or packed.shape[1] != nb:
            raise HashlaneError("bad-argument", f"packed codes must be (n, {nb}) bytes")
        padded = np.zeros((packed.shape[0], 8), dtype=np.uint8)
        padded[:, :nb] = packed
        keys = padded.view("<u8").ravel()
        return cls(keys, length)


@dataclass(frozen=True)
class SearchParams:
    """Search knobs: gather at most `pool_size` candidates, return `top_k`."""

    pool_size: int
    top_k: int

    def __post_init__(self):
        if self.pool_size < 1:
            raise HashlaneError("bad-argument", f"pool_size must be positive, got {self.pool_size}")
        if self.top_k < 1:
            raise HashlaneError("bad-argument", f"top_k must be positive, got {self.top_k}")
        if self.top_k > self.pool_size:
            raise HashlaneError(
                "bad-argument",
                f"top_k ({self.top_k}) must not exceed pool_size ({self.pool_size})",
            )
