"""Search and brute-force oracle tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hashlane.core import CodeSet, FeatureSet, HashlaneError, SearchParams
from hashlane.encoders import encode_features, train_lsh
from hashlane.index import MultiTableIndex, build_table
from hashlane.search import brute_force, encode_query, search, squared_distances


def build_lsh_index(features, length, tables, seed0=0):
    models = tuple(train_lsh(features, length, seed0 + t) for t in range(tables))
    built = tuple(build_table(encode_features(m, features)) for m in models)
    return MultiTableIndex(tables=built, models=models)


def selection_oracle(values, query, k):
    """Independent O(n*k) top-k: repeated scan for the minimum, ties to the
    smaller id, distances by scalar left-to-right accumulation."""
    n, d = values.shape
    dists = []
    for i in range(n):
        acc = 0.0
        for j in range(d):
            diff = float(values[i, j]) - float(query[j])
            acc += diff * diff
        dists.append(acc)
    remaining = list(range(n))
    picked = []
    for _ in range(k):
        best = remaining[0]
        for i in remaining[1:]:
            if dists[i] < dists[best] or (dists[i] == dists[best] and i < best):
                best = i
        picked.append(best)
        remaining.remove(best)
    return picked, [dists[i] for i in picked]


class TestBruteForce:
    def test_single_point_base(self):
        fs = FeatureSet(np.array([[1.0, 2.0]], dtype=np.float32))
        res = brute_force(fs, np.array([9.0, 9.0]), 1)
        assert res.ids.tolist() == [0]
        assert res.locate_ns == 0

    def test_k_equals_n_total_order(self):
        rng = np.random.default_rng(0)
        fs = FeatureSet(rng.standard_normal((50, 4)).astype(np.float32))
        res = brute_force(fs, rng.standard_normal(4), 50)
        assert sorted(res.ids.tolist()) == list(range(50))
        assert (np.diff(res.distances) >= 0).all()

    def test_matches_independent_selection_oracle(self):
        rng = np.random.default_rng(42)
        values = rng.standard_normal((100, 8)).astype(np.float32)
        fs = FeatureSet(values)
        for qi in range(10):
            query = rng.standard_normal(8)
            res = brute_force(fs, query, 10)
            want_ids, want_dists = selection_oracle(values, query, 10)
            assert res.ids.tolist() == want_ids
            assert res.distances.tolist() == want_dists

    def test_tie_broken_by_smaller_id(self):
        values = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], dtype=np.float32)
        fs = FeatureSet(values)
        res = brute_force(fs, np.zeros(2), 3)
        # all three tie at distance 1; id order must win
        assert res.ids.tolist() == [0, 1, 2]

    def test_rejects_k_above_n(self):
        fs = FeatureSet(np.ones((3, 2), dtype=np.float32))
        with pytest.raises(HashlaneError):
            brute_force(fs, np.ones(2), 4)

    def test_rejects_dimension_mismatch(self):
        fs = FeatureSet(np.ones((3, 2), dtype=np.float32))
        with pytest.raises(HashlaneError) as err:
            brute_force(fs, np.ones(3), 1)
        assert err.value.kind == "dimension-mismatch"


class TestSearch:
    def test_two_point_hand_example(self):
        fs = FeatureSet(np.array([[0.0, 0.0], [10.0, 10.0]], dtype=np.float32))
        index = build_lsh_index(fs, 4, tables=1)
        res = search(index, fs, np.array([1.0, 1.0]), SearchParams(pool_size=2, top_k=1))
        assert res.ids.tolist() == [0]
        assert res.distances.tolist() == [2.0]

    def test_self_match_distance_zero(self):
        rng = np.random.default_rng(1)
        fs = FeatureSet(rng.standard_normal((30, 6)).astype(np.float32))
        index = build_lsh_index(fs, 8, tables=2)
        res = search(index, fs, fs.values64[17], SearchParams(pool_size=30, top_k=1))
        assert res.ids.tolist() == [17]
        assert res.distances.tolist() == [0.0]

    def test_full_pool_equals_brute_force(self):
        rng = np.random.default_rng(2)
        values = rng.standard_normal((80, 5)).astype(np.float32)
        values[11] = values[3]  # exact duplicate rows force distance ties
        values[57] = values[3]
        fs = FeatureSet(values)
        index = build_lsh_index(fs, 10, tables=3)
        for qi in range(8):
            query = rng.standard_normal(5) if qi else values[3]
            hashed = search(index, fs, query, SearchParams(pool_size=80, top_k=10))
            exact = brute_force(fs, query, 10)
            assert hashed.ids.tolist() == exact.ids.tolist()
            assert hashed.distances.tolist() == exact.distances.tolist()

    def test_short_pool_returns_whole_pool(self):
        # every item shares one code, pool crossing truncates at P < K is
        # impossible by params, but P < n with K = P returns exactly P items
        fs = FeatureSet(np.eye(6, dtype=np.float32))
        index = build_lsh_index(fs, 6, tables=1)
        res = search(index, fs, np.zeros(6), SearchParams(pool_size=3, top_k=3))
        assert res.pool_size_used == 3
        assert res.ids.shape[0] == 3

    def test_explicit_query_codes_drive_locate(self):
        values = np.arange(12, dtype=np.float32).reshape(6, 2)
        fs = FeatureSet(values)
        codes = CodeSet(np.array([0, 0, 1, 1, 2, 2], dtype=np.uint64), 4)
        index = MultiTableIndex(tables=(build_table(codes),))
        res = search(
            index,
            fs,
            np.array([100.0, 100.0]),
            SearchParams(pool_size=2, top_k=2),
            query_codes=CodeSet(np.array([2], dtype=np.uint64), 4),
        )
        # pool is exactly the bucket for code 2: ids 4 and 5
        assert sorted(res.ids.tolist()) == [4, 5]

    def test_distances_are_exact_left_to_right_sums(self):
        rng = np.random.default_rng(5)
        values = rng.standard_normal((40, 7)).astype(np.float32)
        fs = FeatureSet(values)
        index = build_lsh_index(fs, 8, tables=2)
        query = rng.standard_normal(7)
        res = search(index, fs, query, SearchParams(pool_size=40, top_k=5))
        for rank, i in enumerate(res.ids.tolist()):
            acc = 0.0
            for j in range(7):
                diff = float(values[i, j]) - float(query[j])
                acc += diff * diff
            assert res.distances[rank] == acc  # bit-exact, same op order

    def test_timers_nonnegative(self):
        fs = FeatureSet(np.random.default_rng(3).standard_normal((20, 4)).astype(np.float32))
        index = build_lsh_index(fs, 6, tables=1)
        res = search(index, fs, np.zeros(4), SearchParams(pool_size=5, top_k=2))
        assert res.locate_ns >= 0 and res.scan_ns >= 0

    def test_rejects_missing_models(self):
        codes = CodeSet(np.array([0, 1], dtype=np.uint64), 4)
        index = MultiTableIndex(tables=(build_table(codes),))
        fs = FeatureSet(np.ones((2, 3), dtype=np.float32))
        with pytest.raises(HashlaneError):
            search(index, fs, np.ones(3), SearchParams(pool_size=2, top_k=1))

    def test_rejects_base_index_size_mismatch(self):
        fs = FeatureSet(np.ones((3, 2), dtype=np.float32))
        codes = CodeSet(np.array([0, 1], dtype=np.uint64), 4)
        index = MultiTableIndex(tables=(build_table(codes),))
        with pytest.raises(HashlaneError):
            search(
                index,
                fs,
                np.ones(2),
                SearchParams(pool_size=2, top_k=1),
                query_codes=CodeSet(np.array([0], dtype=np.uint64), 4),
            )

    @given(st.data())
    @settings(max_examples=30, deadline=None)
    def test_pool_growth_converges_to_oracle(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**16)))
        n = data.draw(st.integers(5, 60))
        d = data.draw(st.integers(2, 6))
        fs = FeatureSet(rng.standard_normal((n, d)).astype(np.float32))
        index = build_lsh_index(fs, 6, tables=2, seed0=data.draw(st.integers(0, 100)))
        k = data.draw(st.integers(1, min(5, n)))
        query = rng.standard_normal(d)
        res = search(index, fs, query, SearchParams(pool_size=n, top_k=k))
        exact = brute_force(fs, query, k)
        assert res.ids.tolist() == exact.ids.tolist()
        assert (np.diff(res.distances) >= 0).all()
        assert len(set(res.ids.tolist())) == res.ids.shape[0]


class TestEncodeQuery:
    def test_one_code_per_model(self):
        fs = FeatureSet(np.random.default_rng(0).standard_normal((10, 4)).astype(np.float32))
        models = [train_lsh(fs, 8, s) for s in (0, 1, 2)]
        codes = encode_query(models, fs.values64[0])
        assert len(codes) == 3
        assert all(c.length == 8 for c in codes)

    def test_rejects_empty_models(self):
        with pytest.raises(HashlaneError):
            encode_query([], np.ones(4))


class TestSquaredDistances:
    def test_known_values(self):
        rows = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert squared_distances(rows, np.zeros(2)).tolist() == [0.0, 25.0]

    @given(
        st.lists(
            st.lists(st.floats(-100, 100, width=32), min_size=3, max_size=3),
            min_size=1,
            max_size=20,
        ),
        st.lists(st.floats(-100, 100, width=32), min_size=3, max_size=3),
    )
    def test_matches_scalar_accumulation(self, rows, query):
        rows = np.array(rows, dtype=np.float32)
        query = np.array(query, dtype=np.float32)
        got = squared_distances(rows, query)
        for i in range(rows.shape[0]):
            acc = 0.0
            for j in range(3):
                diff = float(rows[i, j]) - float(query[j])
                acc += diff * diff
            assert got[i] == acc
