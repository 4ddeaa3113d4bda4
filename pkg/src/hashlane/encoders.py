"""Hash-function training and encoding.

Three encoder families:

* LSH: seeded i.i.d. standard-normal projection of mean-centered features.
* IsoH: PCA onto the top-l principal directions followed by an orthogonal
  rotation that equalizes the projected per-dimension variances.
* CRC (classification random coding): each class id is mapped to a distinct
  random l-bit code; items are encoded by label rather than by geometry.

Linear encoders threshold at the projection sign: bit j = 1 iff the centered
feature dotted with column j of the projection is strictly positive. An exact
zero projection yields bit 0, so encoding is deterministic everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hashlane.core import (
    MAX_CODE_LENGTH,
    BinaryCode,
    CodeSet,
    FeatureSet,
    HashlaneError,
    _readonly,
)

KIND_LSH = "lsh"
KIND_ISOH = "isoh"
KIND_CRC = "crc"

# Eigenvalues below this fraction of the largest count as rank deficiency.
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class LinearEncoderModel:
    """A trained sign-of-projection encoder.

    `projection` is d x l; bit j of a code is the sign of the centered
    feature's dot product with column j.
    """

    kind: str
    dim: int
    length: int
    mean: np.ndarray
    projection: np.ndarray
    seed: int

    def __post_init__(self):
        if self.kind not in (KIND_LSH, KIND_ISOH):
            raise HashlaneError("bad-argument", f"unknown linear encoder kind {self.kind!r}")
        if not 1 <= self.length <= MAX_CODE_LENGTH:
            raise HashlaneError("bad-argument", f"code length {self.length} out of range")
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        proj = np.ascontiguousarray(self.projection, dtype=np.float64)
        if mean.shape != (self.dim,) or proj.shape != (self.dim, self.length):
            raise HashlaneError(
                "dimension-mismatch",
                f"model arrays must be ({self.dim},) and ({self.dim}, {self.length}), "
                f"got {mean.shape} and {proj.shape}",
            )
        if not (np.isfinite(mean).all() and np.isfinite(proj).all()):
            raise HashlaneError("bad-value", "model parameters must be finite")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "projection", _readonly(proj))


@dataclass(frozen=True)
class CrcModel:
    """Class-to-code table: `class_codes[label]` is the code for that class."""

    num_classes: int
    length: int
    class_codes: CodeSet
    seed: int

    def __post_init__(self):
        if self.num_classes < 1:
            raise HashlaneError("bad-argument", "need at least one class")
        if self.length < MAX_CODE_LENGTH and 2**self.length < self.num_classes:
            raise HashlaneError(
                "code-space",
                f"code space smaller than class count: 2^{self.length} < {self.num_classes}",
            )
        if self.class_codes.length != self.length:
            raise HashlaneError("length-mismatch", "class codes disagree with model length")
        if self.class_codes.count != self.num_classes:
            raise HashlaneError(
                "bad-argument",
                f"expected {self.num_classes} class codes, got {self.class_codes.count}",
            )
        if np.unique(self.class_codes.keys).size != self.num_classes:
            raise HashlaneError("bad-value", "class codes must be pairwise distinct")


def train_lsh(features: FeatureSet, length: int, seed: int) -> LinearEncoderModel:
    """Random-projection encoder: W entries i.i.d. standard normal."""
    if not 1 <= length <= MAX_CODE_LENGTH:
        raise HashlaneError("bad-argument", f"code length {length} out of range")
    x = features.values64
    mean = x.mean(axis=0)
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((features.dim, length))
    return LinearEncoderModel(KIND_LSH, features.dim, length, mean, projection, seed)


def _balance_diagonal(eigvals: np.ndarray) -> np.ndarray:
    """Orthogonal Q such that diag(Q^T diag(eigvals) Q) is constant.

    Runs at most l-1 Givens rotations. Each step pairs the current
    maximum- and minimum-diagonal coordinates and rotates so the maximum
    one lands exactly on the target a = mean(eigvals); pinned coordinates
    are retired, and the remaining block keeps diagonal mean a, so the
    max/min pair always straddles the target and a real rotation angle
    exists (the quadratic's discriminant stays non-negative).
    """
    l = eigvals.shape[0]
    a = float(eigvals.mean())
    m = np.diag(eigvals.astype(np.float64))
    q = np.eye(l)
    active = list(range(l))
    scale = max(abs(a), float(eigvals.max()), 1.0)
    for _ in range(l - 1):
        diag = m[active, active]
        i = active[int(np.argmax(diag))]
        j = active[int(np.argmin(diag))]
        if m[i, i] - m[j, j] <= 1e-12 * scale:
            break
        alpha = m[j, j] - a  # < 0 while unconverged
        beta = m[i, j]
        gamma = m[i, i] - a  # > 0 while unconverged
        root = math.sqrt(max(beta * beta - alpha * gamma, 0.0))
        cands = [(-beta + root) / alpha, (-beta - root) / alpha]
        t = min(cands, key=abs)
        c = 1.0 / math.sqrt(1.0 + t * t)
        s = t * c
        # two-sided rotation in the (i, j) plane
        row_i, row_j = m[i, :].copy(), m[j, :].copy()
        m[i, :] = c * row_i + s * row_j
        m[j, :] = -s * row_i + c * row_j
        col_i, col_j = m[:, i].copy(), m[:, j].copy()
        m[:, i] = c * col_i + s * col_j
        m[:, j] = -s * col_i + c * col_j
        m[i, i] = a  # exact by construction of t
        m[j, i] = m[i, j]
        q_i, q_j = q[:, i].copy(), q[:, j].copy()
        q[:, i] = c * q_i + s * q_j
        q[:, j] = -s * q_i + c * q_j
        active.remove(i)
    return q


def _seeded_eigvec_adjust(eigvals: np.ndarray, eigvecs: np.ndarray, seed: int):
    """Seeded sign flips plus a permutation within tied-eigenvalue groups,
    so distinct seeds give distinct (but equally valid) PCA bases."""
    rng = np.random.default_rng(seed)
    l = eigvals.shape[0]
    order = np.arange(l)
    scale = max(float(eigvals[0]), 1e-30)
    start = 0
    while start < l:
        stop = start + 1
        while stop < l and abs(eigvals[start] - eigvals[stop]) <= 1e-9 * scale:
            stop += 1
        if stop - start > 1:
            order[start:stop] = start + rng.permutation(stop - start)
        start = stop
    signs = rng.choice(np.array([-1.0, 1.0]), size=l)
    return eigvals[order], eigvecs[:, order] * signs


def train_isoh(features: FeatureSet, length: int, seed: int) -> LinearEncoderModel:
    """PCA + isotropic rotation encoder.

    The top-l principal directions are rotated by an orthogonal Q chosen so
    the projected training data has equal variance a = mean(top-l eigenvalues)
    along every output dimension.
    """
    if not 1 <= length <= MAX_CODE_LENGTH:
        raise HashlaneError("bad-argument", f"code length {length} out of range")
    if length > features.dim:
        raise HashlaneError(
            "bad-argument",
            f"code length {length} exceeds feature dimension {features.dim}",
        )
    if features.count < 2:
        raise HashlaneError("bad-argument", "need at least two items to estimate a covariance")
    x = features.values64
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / features.count
    all_vals, all_vecs = np.linalg.eigh(cov)  # ascending
    eigvals = all_vals[::-1][:length].copy()
    eigvecs = all_vecs[:, ::-1][:, :length].copy()
    if eigvals[0] <= 0.0 or eigvals[-1] < _RANK_TOL * eigvals[0]:
        raise HashlaneError(
            "rank-deficient",
            f"covariance rank is below {length}: smallest retained eigenvalue "
            f"{eigvals[-1]:.3e} vs largest {eigvals[0]:.3e}",
        )
    eigvals, eigvecs = _seeded_eigvec_adjust(eigvals, eigvecs, seed)
    rotation = _balance_diagonal(eigvals)
    projection = eigvecs @ rotation
    return LinearEncoderModel(KIND_ISOH, features.dim, length, mean, projection, seed)


def encode_features(model: LinearEncoderModel, features: FeatureSet) -> CodeSet:
    """Encode every row of `features`; vectorized batch form of `encode`."""
    if features.dim != model.dim:
        raise HashlaneError(
            "dimension-mismatch",
            f"model expects dimension {model.dim}, features have {features.dim}",
        )
    proj = (features.values64 - model.mean) @ model.projection
    bits = proj > 0.0
    packed = np.packbits(bits, axis=1, bitorder="little")
    return CodeSet.from_packed_bytes(packed, model.length)


def encode(model: LinearEncoderModel, x: np.ndarray) -> BinaryCode:
    """Encode a single feature vector: bit j = 1 iff (x - mean) . W[:, j] > 0."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dim:
        raise HashlaneError(
            "dimension-mismatch",
            f"model expects dimension {model.dim}, vector has {x.shape[0]}",
        )
    proj = (x - model.mean) @ model.projection
    key = 0
    for j in range(model.length):
        if proj[j] > 0.0:
            key |= 1 << j
    return BinaryCode.from_key(key, model.length)


def train_crc(num_classes: int, length: int, seed: int) -> CrcModel:
    """Draw `num_classes` distinct codes uniformly without replacement
    from the 2^length code space."""
    if num_classes < 1:
        raise HashlaneError("bad-argument", "need at least one class")
    if not 1 <= length <= MAX_CODE_LENGTH:
        raise HashlaneError("bad-argument", f"code length {length} out of range")
    space = 2**length
    if space < num_classes:
        raise HashlaneError(
            "code-space",
            f"code space smaller than class count: 2^{length} = {space} < {num_classes}",
        )
    rng = np.random.default_rng(seed)
    if length <= 20:
        keys = rng.permutation(space)[:num_classes].astype(np.uint64)
    else:
        # rejection draw for huge spaces: keep first occurrences in draw order
        chosen: list[int] = []
        seen: set[int] = set()
        while len(chosen) < num_classes:
            batch = rng.integers(0, space, size=max(num_classes, 64), dtype=np.uint64)
            for v in batch.tolist():
                if v not in seen:
                    seen.add(v)
                    chosen.append(v)
                    if len(chosen) == num_classes:
                        break
        keys = np.array(chosen, dtype=np.uint64)
    return CrcModel(num_classes, length, CodeSet(keys, length), seed)


def encode_crc(model: CrcModel, label: int) -> BinaryCode:
    """Code for one class id. Base items use true labels; queries use the
    labels a classifier predicted for them."""
    if not 0 <= label < model.num_classes:
        raise HashlaneError(
            "bad-label",
            f"label {label} out of range for {model.num_classes} classes",
        )
    return model.class_codes[label]


def encode_labels(model: CrcModel, labels: np.ndarray) -> CodeSet:
    """Vectorized `encode_crc` over a label array."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise HashlaneError("bad-argument", "no labels to encode")
    if (labels < 0).any() or (labels >= model.num_classes).any():
        bad = labels[(labels < 0) | (labels >= model.num_classes)][0]
        raise HashlaneError(
            "bad-label",
            f"label {int(bad)} out of range for {model.num_classes} classes",
        )
    return CodeSet(model.class_codes.keys[labels], model.length)
