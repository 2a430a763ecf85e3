import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from treefanova.data import (
    BinGrid,
    Dataset,
    build_bins,
    friedman_function,
    gen_friedman,
    load_csv,
    split,
)
from treefanova.exceptions import ConfigError, IngestionError


class TestLoadCsv:
    def test_numeric(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
        data = load_csv(path, "y")
        assert data.n_samples == 3
        assert data.feature_names == ["a", "b"]
        np.testing.assert_array_equal(data.target, [3, 6, 9])

    def test_categorical_codes_sorted_lexicographically(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("c,x,y\na,1,0\nb,2,1\na,3,0\n")
        data = load_csv(path, "y", task="binary")
        np.testing.assert_array_equal(data.features[:, 0], [0, 1, 0])
        assert data.metadata["categories"]["c"] == ["a", "b"]

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        with pytest.raises(ConfigError):
            load_csv(path, "y")

    def test_bad_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\noops,3\n4,5\n")
        with pytest.raises(IngestionError, match=r"row 3.*'a'"):
            load_csv(path, "y")

    def test_missing_value_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\n,3\n")
        with pytest.raises(IngestionError):
            load_csv(path, "y")

    def test_binary_target_must_be_01(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\n2,0\n")
        with pytest.raises(IngestionError):
            load_csv(path, "y", task="binary")


class TestFriedman:
    def test_center_point(self):
        x = np.full((1, 10), 0.5)
        # 10 sin(pi/4) + 0 + 5 + 2.5
        assert friedman_function(x)[0] == pytest.approx(14.5711, abs=1e-4)

    def test_all_terms_vanish(self):
        x = np.zeros((1, 10))
        x[0, 2] = 0.5
        assert friedman_function(x)[0] == 0.0

    def test_sample_mean(self):
        # Monte-Carlo oracle for E[y], independent of the generator
        rng = np.random.default_rng(2024)
        U = rng.uniform(size=(1_000_000, 5))
        oracle = np.mean(
            10 * np.sin(np.pi * U[:, 0] * U[:, 1]) + 20 * (U[:, 2] - 0.5) ** 2 + 10 * U[:, 3] + 5 * U[:, 4]
        )
        assert oracle == pytest.approx(14.413, abs=0.02)
        data = gen_friedman(2000, 0.1, seed=3)
        assert abs(data.target.mean() - oracle) < 0.2

    def test_shape_and_determinism(self):
        a = gen_friedman(50, 0.0, seed=1)
        b = gen_friedman(50, 0.0, seed=1)
        assert a.features.shape == (50, 10)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.target.tobytes() == b.target.tobytes()
        np.testing.assert_array_equal(a.target, friedman_function(a.features))

    def test_rejects_bad_n(self):
        with pytest.raises(ConfigError):
            gen_friedman(0, 0.1)


class TestSplit:
    @pytest.mark.parametrize(
        "n, fractions, sizes",
        [(100, (0.64, 0.16, 0.20), (64, 16, 20)), (5, (0.6, 0.2, 0.2), (3, 1, 1))],
    )
    def test_sizes(self, n, fractions, sizes):
        data = Dataset(np.arange(n, dtype=float)[:, None], np.zeros(n), ["x"])
        parts = split(data, fractions, seed=0)
        assert tuple(p.n_samples for p in parts) == sizes

    def test_disjoint_and_deterministic(self):
        n = 97
        data = Dataset(np.arange(n, dtype=float)[:, None], np.zeros(n), ["x"])
        a = split(data, seed=4)
        b = split(data, seed=4)
        ids = np.concatenate([p.features[:, 0] for p in a])
        assert sorted(ids) == list(range(n))
        for p, q in zip(a, b):
            np.testing.assert_array_equal(p.features, q.features)

    def test_fractions_must_sum_to_one(self):
        data = Dataset(np.zeros((10, 1)), np.zeros(10), ["x"])
        with pytest.raises(ConfigError):
            split(data, (0.5, 0.2, 0.2))


class TestBins:
    def test_median_split(self):
        grid = build_bins(np.array([[1.0], [2.0], [3.0], [4.0]]), max_bins=2)
        np.testing.assert_array_equal(grid.splits[0], [2.5])

    def test_constant_feature(self):
        grid = build_bins(np.ones((10, 1)), max_bins=8)
        assert grid.splits[0].size == 0
        assert grid.counts[0].tolist() == [10]

    def test_few_distinct_values_use_all_midpoints(self):
        grid = build_bins(np.array([[0.0], [1.0], [1.0], [3.0]]), max_bins=10)
        np.testing.assert_array_equal(grid.splits[0], [0.5, 2.0])
        assert grid.counts[0].tolist() == [1, 2, 1]

    def test_vigintiles(self):
        x = np.random.default_rng(0).uniform(size=1000)
        grid = build_bins(x[:, None], max_bins=20)
        assert grid.splits[0].size == 19
        exact = np.quantile(x, np.arange(1, 20) / 20)
        assert np.max(np.abs(grid.splits[0] - exact)) < 0.005

    def test_json_round_trip(self):
        x = np.random.default_rng(1).normal(size=(50, 2))
        grid = build_bins(x, max_bins=8, feature_names=["u", "v"])
        payload = json.loads(json.dumps(grid.to_json()))
        assert set(payload[0]) >= {"feature", "splits", "counts"}
        back = BinGrid.from_json(payload)
        for a, b in zip(grid.splits, back.splits):
            np.testing.assert_array_equal(a, b)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, st.integers(2, 200), elements=st.floats(-1e3, 1e3)),
        st.integers(2, 40),
    )
    def test_properties(self, col, max_bins):
        grid = build_bins(col[:, None], max_bins=max_bins)
        s = grid.splits[0]
        assert np.all(np.diff(s) > 0)
        assert s.size + 1 <= max_bins
        assert grid.counts[0].sum() == col.size
        assert math.isclose(grid.densities()[0].sum(), 1.0, abs_tol=1e-12)
        bins = grid.transform(col[:, None])[0]
        order = np.argsort(col, kind="stable")
        assert np.all(np.diff(bins[order].astype(int)) >= 0)
