"""Synthetic data generator tests."""

import numpy as np
import pytest

from hashlane.core import HashlaneError
from hashlane.datagen import corrupt_labels, gaussian_clusters
from hashlane.search import brute_force


class TestGaussianClusters:
    def test_shapes_and_label_range(self):
        base, queries = gaussian_clusters(10, 100, 16, spread=0.05, seed=1)
        assert base.count == 1000
        assert base.dim == 16
        assert sorted(np.unique(base.labels)) == list(range(10))
        assert queries is None

    def test_query_set_drawn_from_same_means(self):
        base, queries = gaussian_clusters(4, 50, 8, spread=0.01, seed=2, queries_per_cluster=5)
        assert queries.count == 20
        # each query sits on top of its own cluster: its nearest base point
        # shares its label
        for qi in range(queries.count):
            res = brute_force(base, queries.values64[qi], 1)
            assert base.labels[res.ids[0]] == queries.labels[qi]

    def test_zero_spread_gives_perfect_neighbors(self):
        base, queries = gaussian_clusters(5, 20, 6, spread=0.0, seed=3, queries_per_cluster=2)
        for qi in range(queries.count):
            res = brute_force(base, queries.values64[qi], 10)
            assert (base.labels[res.ids] == queries.labels[qi]).all()

    def test_deterministic_per_seed(self):
        a, qa = gaussian_clusters(3, 10, 4, spread=0.1, seed=7, queries_per_cluster=2)
        b, qb = gaussian_clusters(3, 10, 4, spread=0.1, seed=7, queries_per_cluster=2)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(qa.values, qb.values)
        c, _ = gaussian_clusters(3, 10, 4, spread=0.1, seed=8)
        assert not np.array_equal(a.values, c.values)

    def test_rejects_bad_arguments(self):
        with pytest.raises(HashlaneError):
            gaussian_clusters(0, 10, 4, 0.1, 0)
        with pytest.raises(HashlaneError):
            gaussian_clusters(3, 10, 4, -0.1, 0)


class TestCorruptLabels:
    def test_exact_corruption_count(self):
        labels = np.arange(100, dtype=np.int32) % 10
        predicted = corrupt_labels(labels, accuracy=0.8, num_classes=10, seed=1)
        assert (predicted != labels).sum() == 20
        assert ((predicted >= 0) & (predicted < 10)).all()

    def test_perfect_accuracy_is_identity(self):
        labels = np.array([1, 2, 3], dtype=np.int32)
        assert np.array_equal(corrupt_labels(labels, 1.0, 4, seed=0), labels)

    def test_zero_accuracy_flips_everything(self):
        labels = np.zeros(50, dtype=np.int32)
        predicted = corrupt_labels(labels, 0.0, 5, seed=2)
        assert (predicted != labels).all()

    def test_rounds_to_nearest_count(self):
        labels = np.zeros(10, dtype=np.int32)
        predicted = corrupt_labels(labels, accuracy=0.75, num_classes=3, seed=3)
        # 2.5 wrong rounds to 2
        assert (predicted != labels).sum() == 2

    def test_deterministic(self):
        labels = np.arange(30, dtype=np.int32) % 3
        a = corrupt_labels(labels, 0.5, 3, seed=9)
        b = corrupt_labels(labels, 0.5, 3, seed=9)
        assert np.array_equal(a, b)

    def test_rejects_bad_accuracy(self):
        with pytest.raises(HashlaneError):
            corrupt_labels(np.zeros(5, dtype=np.int32), 1.5, 3, seed=0)

    def test_needs_two_classes_to_mislabel(self):
        with pytest.raises(HashlaneError):
            corrupt_labels(np.zeros(5, dtype=np.int32), 0.5, 1, seed=0)
