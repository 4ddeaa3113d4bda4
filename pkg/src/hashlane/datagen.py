"""Synthetic labeled datasets: Gaussian clusters plus a stub label predictor.

Desk-scale stand-ins for image-feature corpora. Cluster means are uniform on
[-1, 1]^d, points are isotropic Gaussians around their mean, labels are the
cluster ids. Queries can be drawn from the same cluster means so base and
query sets share a distribution. `corrupt_labels` fabricates a classifier
output with an exactly controlled accuracy.
"""

from __future__ import annotations

import numpy as np

from hashlane.core import FeatureSet, HashlaneError


def gaussian_clusters(
    clusters: int,
    per_cluster: int,
    dim: int,
    spread: float,
    seed: int,
    queries_per_cluster: int = 0,
) -> tuple[FeatureSet, FeatureSet | None]:
    """Labeled cluster data, plus an optional query set from the same means.

    Returns (base, queries); queries is None when queries_per_cluster is 0.
    Deterministic per seed: one generator draws means, base points, then
    query points in a fixed order.
    """
    if clusters < 1 or per_cluster < 1 or dim < 1:
        raise HashlaneError("bad-argument", "clusters, per_cluster, and dim must be positive")
    if spread < 0:
        raise HashlaneError("bad-argument", f"spread must be non-negative, got {spread}")
    if queries_per_cluster < 0:
        raise HashlaneError("bad-argument", "queries_per_cluster must be non-negative")

    rng = np.random.default_rng(seed)
    means = rng.uniform(-1.0, 1.0, size=(clusters, dim))

    def draw(count_per_cluster: int) -> FeatureSet:
        n = clusters * count_per_cluster
        labels = np.repeat(np.arange(clusters, dtype=np.int32), count_per_cluster)
        noise = rng.standard_normal((n, dim)) * spread
        values = means[labels] + noise
        return FeatureSet(values.astype(np.float32), labels=labels)

    base = draw(per_cluster)
    queries = draw(queries_per_cluster) if queries_per_cluster else None
    return base, queries


def corrupt_labels(labels: np.ndarray, accuracy: float, num_classes: int, seed: int) -> np.ndarray:
    """Predicted labels with a realized accuracy as close to `accuracy` as
    n allows: exactly round((1 - accuracy) * n) items get a different label.
    """
    labels = np.asarray(labels, dtype=np.int32)
    n = labels.shape[0]
    if n < 1:
        raise HashlaneError("bad-argument", "no labels to corrupt")
    if not 0.0 <= accuracy <= 1.0:
        raise HashlaneError("bad-argument", f"accuracy must be in [0, 1], got {accuracy}")
    n_wrong = round((1.0 - accuracy) * n)
    predicted = labels.copy()
    if n_wrong == 0:
        return predicted
    if num_classes < 2:
        raise HashlaneError("bad-argument", "cannot mislabel with fewer than two classes")
    rng = np.random.default_rng(seed)
    victims = rng.choice(n, size=n_wrong, replace=False)
    shift = rng.integers(1, num_classes, size=n_wrong).astype(np.int32)
    predicted[victims] = (predicted[victims] + shift) % num_classes
    return predicted
