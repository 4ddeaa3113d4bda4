"""Binary artifact files: features, codes, encoder models, indexes.

Four self-describing little-endian formats, each opened by a 5-byte magic:

* ``FSET1`` features: u32 n, u32 d, u8 has_labels, n*d float32 row-major,
  then n int32 labels when has_labels is set. A labels-only file (predicted
  labels for queries) is the d = 0 case.
* ``CSET1`` codes: u32 n, u32 l, then n * ceil(l/8) packed code bytes.
* ``HMDL1`` encoder model: u8 kind (0 random projection, 1 isotropic
  rotation, 2 class coding), u32 d, u32 l, u64 seed; linear kinds then carry
  d float64 mean values plus d*l float64 projection entries column-major;
  class coding carries u32 c plus c packed codes (d is written as 0).
* ``HIDX1`` index: u32 T, u32 l, u32 n; per table a u64 bucket count, then
  per bucket u64 key, u32 size, size u32 ids. Bucket keys ascending.

Writers are canonical (one byte stream per value), so write -> read -> write
is byte-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from hashlane.core import CodeSet, FeatureSet, FormatError, HashlaneError, _readonly, code_nbytes
from hashlane.encoders import KIND_CRC, KIND_ISOH, KIND_LSH, CrcModel, LinearEncoderModel
from hashlane.index import HashTable, MultiTableIndex

MAGIC_FEATURES = b"FSET1"
MAGIC_CODES = b"CSET1"
MAGIC_MODEL = b"HMDL1"
MAGIC_INDEX = b"HIDX1"

_MODEL_KIND_BYTE = {KIND_LSH: 0, KIND_ISOH: 1, KIND_CRC: 2}
_BYTE_MODEL_KIND = {v: k for k, v in _MODEL_KIND_BYTE.items()}


class _Reader:
    """Cursor over a byte string with truncation checking."""

    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated", f"{self.path}: file ends {self.pos + n - len(self.data)} bytes early")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype).copy()

    def expect_magic(self, magic: bytes) -> None:
        got = self.take(len(magic))
        if got != magic:
            raise FormatError(
                "bad-magic",
                f"{self.path}: expected magic {magic.decode()}, found {got!r}",
            )

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                "trailing-data",
                f"{self.path}: {len(self.data) - self.pos} unexpected bytes after payload",
            )


def _read(path) -> _Reader:
    path = Path(path)
    try:
        return _Reader(path.read_bytes(), path)
    except OSError as exc:
        raise FormatError("unreadable", f"{path}: {exc}") from exc


def write_features(path, features: FeatureSet) -> None:
    parts = [MAGIC_FEATURES]
    parts.append(struct.pack("<IIB", features.count, features.dim, int(features.labels is not None)))
    parts.append(np.ascontiguousarray(features.values, dtype="<f4").tobytes())
    if features.labels is not None:
        parts.append(np.ascontiguousarray(features.labels, dtype="<i4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_features(path) -> FeatureSet:
    r = _read(path)
    r.expect_magic(MAGIC_FEATURES)
    n, d, has_labels = r.unpack("<IIB")
    if n < 1:
        raise FormatError("bad-value", f"{r.path}: feature file holds no items")
    if d < 1:
        raise FormatError(
            "bad-value",
            f"{r.path}: dimension 0 marks a labels-only file; read it as labels",
        )
    values = r.array("<f4", n * d).reshape(n, d)
    labels = r.array("<i4", n) if has_labels else None
    r.finish()
    return FeatureSet(values, labels=labels)


def write_label_file(path, labels: np.ndarray) -> None:
    """Labels-only feature file (d = 0): how predicted query labels arrive."""
    labels = np.ascontiguousarray(labels, dtype="<i4")
    if labels.ndim != 1 or labels.shape[0] < 1:
        raise HashlaneError("bad-argument", "need a non-empty 1-d label array")
    parts = [MAGIC_FEATURES, struct.pack("<IIB", labels.shape[0], 0, 1), labels.tobytes()]
    Path(path).write_bytes(b"".join(parts))


def read_label_file(path) -> np.ndarray:
    r = _read(path)
    r.expect_magic(MAGIC_FEATURES)
    n, d, has_labels = r.unpack("<IIB")
    if d != 0:
        raise FormatError("bad-value", f"{r.path}: expected a labels-only file, found d={d}")
    if not has_labels or n < 1:
        raise FormatError("missing-labels", f"{r.path}: labels-only file carries no labels")
    labels = r.array("<i4", n)
    r.finish()
    if (labels < 0).any():
        raise FormatError("bad-value", f"{r.path}: labels must be non-negative")
    return _readonly(labels)


def write_codes(path, codes: CodeSet) -> None:
    parts = [
        MAGIC_CODES,
        struct.pack("<II", codes.count, codes.length),
        codes.packed_bytes().tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def read_codes(path) -> CodeSet:
    r = _read(path)
    r.expect_magic(MAGIC_CODES)
    n, length = r.unpack("<II")
    if not 1 <= length <= 64:
        raise FormatError("bad-value", f"{r.path}: code length {length} out of range")
    if n < 1:
        raise FormatError("bad-value", f"{r.path}: code file holds no items")
    packed = r.array("<u1", n * code_nbytes(length)).reshape(n, code_nbytes(length))
    r.finish()
    return CodeSet.from_packed_bytes(packed, length)


def write_model(path, model: LinearEncoderModel | CrcModel) -> None:
    if isinstance(model, LinearEncoderModel):
        parts = [
            MAGIC_MODEL,
            struct.pack(
                "<BIIQ", _MODEL_KIND_BYTE[model.kind], model.dim, model.length, model.seed
            ),
            np.ascontiguousarray(model.mean, dtype="<f8").tobytes(),
            model.projection.astype("<f8").tobytes(order="F"),
        ]
    elif isinstance(model, CrcModel):
        parts = [
            MAGIC_MODEL,
            struct.pack("<BIIQ", _MODEL_KIND_BYTE[KIND_CRC], 0, model.length, model.seed),
            struct.pack("<I", model.num_classes),
            model.class_codes.packed_bytes().tobytes(),
        ]
    else:
        raise HashlaneError("bad-argument", f"cannot serialize model of type {type(model).__name__}")
    Path(path).write_bytes(b"".join(parts))


def read_model(path) -> LinearEncoderModel | CrcModel:
    r = _read(path)
    r.expect_magic(MAGIC_MODEL)
    kind_byte, d, length, seed = r.unpack("<BIIQ")
    if kind_byte not in _BYTE_MODEL_KIND:
        raise FormatError("bad-value", f"{r.path}: unknown model kind byte {kind_byte}")
    kind = _BYTE_MODEL_KIND[kind_byte]
    if kind == KIND_CRC:
        (num_classes,) = r.unpack("<I")
        if num_classes < 1:
            raise FormatError("bad-value", f"{r.path}: class-coding model with no classes")
        packed = r.array("<u1", num_classes * code_nbytes(length)).reshape(
            num_classes, code_nbytes(length)
        )
        r.finish()
        return CrcModel(num_classes, length, CodeSet.from_packed_bytes(packed, length), seed)
    if d < 1:
        raise FormatError("bad-value", f"{r.path}: linear model with dimension 0")
    mean = r.array("<f8", d)
    proj = r.array("<f8", d * length).reshape(d, length, order="F")
    r.finish()
    return LinearEncoderModel(kind, d, length, mean, np.ascontiguousarray(proj), seed)


def write_index(path, index: MultiTableIndex) -> None:
    parts = [
        MAGIC_INDEX,
        struct.pack("<III", index.table_count, index.length, index.count),
    ]
    for table in index.tables:
        parts.append(struct.pack("<Q", table.bucket_count))
        sizes = np.diff(table.offsets)
        for b in range(table.bucket_count):
            parts.append(struct.pack("<QI", int(table.unique_keys[b]), int(sizes[b])))
            parts.append(
                np.ascontiguousarray(
                    table.ids[table.offsets[b] : table.offsets[b + 1]], dtype="<u4"
                ).tobytes()
            )
    Path(path).write_bytes(b"".join(parts))


def read_index(path) -> MultiTableIndex:
    r = _read(path)
    r.expect_magic(MAGIC_INDEX)
    table_count, length, n = r.unpack("<III")
    if table_count < 1 or n < 1 or not 1 <= length <= 64:
        raise FormatError("bad-value", f"{r.path}: implausible index header")
    tables = []
    for _ in range(table_count):
        (bucket_count,) = r.unpack("<Q")
        if not 1 <= bucket_count <= n:
            raise FormatError(
                "bad-value",
                f"{r.path}: table declares {bucket_count} buckets for {n} items",
            )
        keys = np.empty(bucket_count, dtype=np.uint64)
        offsets = np.empty(bucket_count + 1, dtype=np.int64)
        all_ids = np.empty(n, dtype=np.uint32)
        offsets[0] = 0
        for b in range(int(bucket_count)):
            key, size = r.unpack("<QI")
            keys[b] = key
            end = offsets[b] + size
            if end > n:
                raise FormatError("bad-value", f"{r.path}: table holds more ids than n={n}")
            all_ids[offsets[b] : end] = r.array("<u4", size)
            offsets[b + 1] = end
        if offsets[-1] != n:
            raise FormatError(
                "bad-value",
                f"{r.path}: table ids cover {offsets[-1]} of {n} items",
            )
        if bucket_count > 1 and not (keys[1:] > keys[:-1]).all():
            raise FormatError("bad-value", f"{r.path}: bucket keys out of order")
        if length < 64 and (keys >> np.uint64(length)).any():
            raise FormatError("bad-value", f"{r.path}: bucket key exceeds {length} bits")
        tables.append(
            HashTable(
                length=length,
                unique_keys=_readonly(keys),
                offsets=_readonly(offsets),
                ids=_readonly(all_ids),
            )
        )
    r.finish()
    return MultiTableIndex(tables=tuple(tables))
