"""Benchmark harness tests."""

import numpy as np
import pytest

from hashlane.core import FeatureSet, HashlaneError, SearchParams
from hashlane.bench import (
    BenchRecord,
    CSV_HEADER,
    TIMING_NOTE,
    brute_force_record,
    code_length_report,
    default_pool_schedule,
    emit_csv,
    emit_radius_csv,
    precision_at_k,
    run_sweep,
    write_run_dir,
)
from hashlane.datagen import corrupt_labels, gaussian_clusters
from hashlane.encoders import encode_features, encode_labels, train_crc, train_lsh
from hashlane.index import MultiTableIndex, build_table
from hashlane.search import search


def lsh_index(base, length, tables, seed0=0):
    models = tuple(train_lsh(base, length, seed0 + t) for t in range(tables))
    return MultiTableIndex(
        tables=tuple(build_table(encode_features(m, base)) for m in models),
        models=models,
    )


def record(method="lsh", pool=10, precision=0.5, locate=100, scan=200):
    return BenchRecord(
        method=method,
        tables=1,
        bits=8,
        pool=pool,
        top_k=5,
        mean_precision=precision,
        total_locate_ns=locate,
        total_scan_ns=scan,
        total_ns=locate + scan,
        query_count=3,
    )


class TestPrecisionAtK:
    def test_partial_overlap(self):
        base_labels = np.array([1] * 7 + [2] * 3)
        assert precision_at_k(np.arange(10), base_labels, 1, 10) == 0.7

    def test_bounds(self):
        labels = np.array([4, 4, 4])
        assert precision_at_k(np.array([0, 1, 2]), labels, 4, 3) == 1.0
        assert precision_at_k(np.array([0, 1, 2]), labels, 9, 3) == 0.0

    def test_short_result_divides_by_k(self):
        labels = np.array([1, 1])
        assert precision_at_k(np.array([0, 1]), labels, 1, 10) == 0.2

    def test_missing_labels(self):
        with pytest.raises(HashlaneError) as err:
            precision_at_k(np.array([0]), None, 1, 1)
        assert err.value.kind == "missing-labels"


class TestBenchRecord:
    def test_total_must_add_up(self):
        with pytest.raises(HashlaneError):
            BenchRecord("m", 1, 8, 10, 5, 0.5, 100, 200, 999, 3)

    def test_precision_range(self):
        with pytest.raises(HashlaneError):
            record(precision=1.5)


class TestRunSweep:
    def setup_method(self):
        self.base, self.queries = gaussian_clusters(
            5, 60, 8, spread=0.15, seed=10, queries_per_cluster=8
        )
        self.index = lsh_index(self.base, 12, tables=2)

    def test_full_pool_matches_brute_force(self):
        records, _ = run_sweep(
            self.index, self.base, self.queries, 10, [self.base.count]
        )
        oracle = brute_force_record(self.base, self.queries, 10)
        assert records[0].mean_precision == oracle.mean_precision

    def test_precision_non_decreasing_in_pool(self):
        records, _ = run_sweep(
            self.index, self.base, self.queries, 10, [10, 40, 160, self.base.count]
        )
        precisions = [r.mean_precision for r in records]
        assert precisions == sorted(precisions)

    def test_histogram_mass_conservation(self):
        _, histograms = run_sweep(self.index, self.base, self.queries, 10, [10, 50])
        for h in histograms:
            assert h.total() == self.queries.count

    def test_precisions_deterministic_across_runs(self):
        r1, _ = run_sweep(self.index, self.base, self.queries, 10, [25, 100])
        r2, _ = run_sweep(self.index, self.base, self.queries, 10, [25, 100])
        assert [r.mean_precision for r in r1] == [r.mean_precision for r in r2]

    def test_worker_sharding_same_precisions(self):
        r1, h1 = run_sweep(self.index, self.base, self.queries, 10, [30])
        r2, h2 = run_sweep(self.index, self.base, self.queries, 10, [30], workers=3)
        assert r1[0].mean_precision == r2[0].mean_precision
        assert h1[0].counts == h2[0].counts

    def test_crc_precision_equals_predictor_accuracy(self):
        # equal class sizes and P = class size: each query's pool is exactly
        # the predicted class's bucket, so precision is 1 for a correct
        # prediction and 0 for a wrong one
        base, queries = gaussian_clusters(8, 40, 6, spread=0.1, seed=4, queries_per_cluster=5)
        model = train_crc(8, 16, seed=1)
        index = MultiTableIndex(
            tables=(build_table(encode_labels(model, base.labels)),)
        )
        predicted = corrupt_labels(queries.labels, accuracy=0.8, num_classes=8, seed=2)
        records, _ = run_sweep(
            index,
            base,
            queries,
            10,
            [40],
            query_codes=[encode_labels(model, predicted)],
            method="crc",
        )
        assert records[0].mean_precision == pytest.approx(0.8, abs=1e-12)

    def test_rejects_bad_schedules(self):
        with pytest.raises(HashlaneError):
            run_sweep(self.index, self.base, self.queries, 10, [])
        with pytest.raises(HashlaneError):
            run_sweep(self.index, self.base, self.queries, 10, [50, 20])
        with pytest.raises(HashlaneError):
            run_sweep(self.index, self.base, self.queries, 10, [5, 20])

    def test_rejects_unlabeled_queries(self):
        bare = FeatureSet(self.queries.values)
        with pytest.raises(HashlaneError) as err:
            run_sweep(self.index, self.base, bare, 10, [20])
        assert err.value.kind == "missing-labels"

    def test_scan_time_roughly_linear_in_pool(self):
        rng = np.random.default_rng(0)
        base = FeatureSet(
            rng.standard_normal((4000, 32)).astype(np.float32),
            labels=np.zeros(4000, dtype=np.int32),
        )
        index = lsh_index(base, 16, tables=1)
        query = rng.standard_normal(32)
        base.values64

        def median_scan(pool):
            times = []
            for _ in range(15):
                res = search(index, base, query, SearchParams(pool, 10))
                assert res.pool_size_used == pool
                times.append(res.scan_ns)
            return float(np.median(times))

        small, big = 250, 2000
        # 8x the pool may cost at most 3 * 8x the scan time
        assert median_scan(big) <= 3 * (big / small) * median_scan(small)


class TestCodeLengthReport:
    def test_ball_columns_from_binomial(self):
        base, queries = gaussian_clusters(4, 30, 8, spread=0.2, seed=5, queries_per_cluster=3)
        rows = code_length_report(base, queries, "lsh", [8, 16], pool_size=20)
        assert rows[1].cumulative_ball_sizes[2] == 137  # 1 + 16 + 120
        assert rows[0].cumulative_ball_sizes == (1, 9, 37, 93, 163)

    def test_identical_codes_finish_at_radius_zero(self):
        values = np.ones((40, 6), dtype=np.float32)
        labels = np.zeros(40, dtype=np.int32)
        base = FeatureSet(values, labels=labels)
        queries = FeatureSet(values[:5], labels=labels[:5])
        rows = code_length_report(base, queries, "lsh", [8, 16, 24], pool_size=10)
        for row in rows:
            assert row.mean_final_radius == 0.0
            assert row.radius0_fraction == 1.0

    def test_visits_grow_with_length(self):
        base, queries = gaussian_clusters(
            6, 500, 16, spread=0.3, seed=6, queries_per_cluster=10
        )
        rows = code_length_report(base, queries, "lsh", [8, 16, 24], pool_size=50)
        visits = [r.mean_buckets_visited for r in rows]
        assert visits == sorted(visits)

    def test_rejects_label_coded_kind(self):
        base, queries = gaussian_clusters(3, 10, 4, spread=0.1, seed=7, queries_per_cluster=2)
        with pytest.raises(HashlaneError):
            code_length_report(base, queries, "crc", [8], pool_size=5)


class TestCsvEmission:
    def test_one_record_two_lines(self):
        text = emit_csv([record()])
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0] == CSV_HEADER

    def test_precision_formatting(self):
        text = emit_csv([record(precision=0.7)])
        assert ",0.700000," in text.splitlines()[1]

    def test_times_are_plain_integers(self):
        line = emit_csv([record(locate=123, scan=456)]).splitlines()[1]
        assert line.endswith("123,456,579,3")

    def test_empty_is_an_error(self):
        with pytest.raises(HashlaneError):
            emit_csv([])
        with pytest.raises(HashlaneError):
            emit_radius_csv([])

    def test_byte_stable(self):
        recs = [record(pool=10), record(pool=20)]
        assert emit_csv(recs) == emit_csv(list(recs))


class TestRunDir:
    def test_writes_named_by_config_hash(self, tmp_path):
        recs = [record()]
        cfg = {"method": "lsh", "bits": 8, "pools": "10"}
        d1 = write_run_dir(tmp_path, cfg, recs)
        d2 = write_run_dir(tmp_path, cfg, recs)
        assert d1 == d2
        assert d1.name.startswith("run-")
        body = (d1 / "bench.csv").read_text()
        assert body.startswith(TIMING_NOTE + "\n" + CSV_HEADER)
        assert (d1 / "config.txt").read_text() == "bits=8\nmethod=lsh\npools=10\n"

    def test_different_config_different_dir(self, tmp_path):
        recs = [record()]
        d1 = write_run_dir(tmp_path, {"bits": 8}, recs)
        d2 = write_run_dir(tmp_path, {"bits": 16}, recs)
        assert d1 != d2

    def test_radius_file_when_histograms_given(self, tmp_path):
        from hashlane.bench import RadiusHistogram

        h = RadiusHistogram(bits=8, pool=10, counts={0: 2, 1: 1})
        d = write_run_dir(tmp_path, {"x": 1}, [record()], [h])
        assert (d / "radius.csv").read_text() == "bits,pool,radius,count\n8,10,0,2\n8,10,1,1\n"


class TestPoolSchedule:
    def test_geometric_capped(self):
        assert default_pool_schedule(10, 100) == [10, 20, 40, 80, 100]

    def test_small_n(self):
        assert default_pool_schedule(10, 10) == [10]
        assert default_pool_schedule(3, 4) == [3, 4]
