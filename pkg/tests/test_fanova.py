import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_ensemble
from treefanova.ensemble import Ensemble, Leaf, Split, predict_raw
from treefanova.exceptions import UnsupportedArityError
from treefanova.fanova import (
    EffectTensor,
    FanovaModel,
    PurificationWarning,
    aggregate,
    dumps,
    evaluate,
    inner_product,
    loads,
    max_slice_mean,
    purify,
)


def two_way(values, domain=None, axes=None):
    values = np.asarray(values, dtype=float)
    if axes is None:
        axes = tuple(np.arange(1, s, dtype=float) for s in values.shape)
    eff = EffectTensor((0, 1), axes, values)
    return FanovaModel(0.0, {(0, 1): eff}, feature_names=["a", "b"], domain=domain)


def double_center(M):
    r = M.mean(axis=1, keepdims=True)
    c = M.mean(axis=0, keepdims=True)
    g = M.mean()
    return M - r - c + g, (r - g).ravel(), (c - g).ravel(), g


class TestAggregate:
    def test_root_only(self):
        model = Ensemble([Leaf(2.0)], [0.5], 3.0, "identity", ["a"])
        fm = aggregate(model)
        assert fm.intercept == 4.0
        assert fm.effects == {}

    def test_depth_one_tree(self):
        model = Ensemble([Split(0, 5.0, Leaf(2.0), Leaf(-2.0))], [1.0], 0.0, "identity", ["a"])
        eff = aggregate(model).effects[(0,)]
        np.testing.assert_array_equal(eff.axes[0], [5.0])
        np.testing.assert_array_equal(eff.values, [2.0, -2.0])

    def test_depth_two_tree_lands_in_pair(self):
        tree = Split(0, 0.5, Split(1, 0.3, Leaf(1.0), Leaf(2.0)), Split(1, 0.3, Leaf(3.0), Leaf(4.0)))
        fm = aggregate(Ensemble([tree], [1.0], 0.0, "identity", ["a", "b"]))
        assert list(fm.effects) == [(0, 1)]
        np.testing.assert_array_equal(fm.effects[(0, 1)].values, [[1, 2], [3, 4]])

    def test_axes_are_union_of_boundaries(self):
        trees = [Split(0, 0.2, Leaf(1.0), Leaf(0.0)), Split(0, 0.7, Leaf(0.0), Leaf(1.0))]
        eff = aggregate(Ensemble(trees, [1.0, 1.0], 0.0, "identity", ["a"])).effects[(0,)]
        np.testing.assert_array_equal(eff.axes[0], [0.2, 0.7])
        np.testing.assert_array_equal(eff.values, [1.0, 0.0, 1.0])

    def test_arity_four_rejected(self):
        tree = Split(0, 0.5, Split(1, 0.5, Split(2, 0.5, Split(3, 0.5, Leaf(1), Leaf(2)), Leaf(0)), Leaf(0)), Leaf(0))
        with pytest.raises(UnsupportedArityError):
            aggregate(Ensemble([tree], [1.0], 0.0, "identity", list("abcd")))

    def test_unreachable_leaf_skipped(self):
        tree = Split(0, 2.0, Split(0, 5.0, Leaf(1.0), Leaf(9.0)), Leaf(3.0))
        model = Ensemble([tree], [1.0], 0.0, "identity", ["a"])
        with pytest.warns(UserWarning, match="unreachable"):
            fm = aggregate(model)
        xs = np.linspace(-1, 7, 50)[:, None]
        np.testing.assert_allclose(evaluate(fm, xs), predict_raw(model, xs))

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_reconstruction(self, depth):
        rng = np.random.default_rng(depth)
        model = random_ensemble(rng, 50, depth, 4)
        X = rng.uniform(-0.2, 1.2, size=(10_000, 4))
        assert np.max(np.abs(evaluate(aggregate(model), X) - predict_raw(model, X))) < 1e-9


class TestEvaluate:
    def test_empty_effects(self):
        assert evaluate(FanovaModel(1.5, {}, feature_names=["a"]), [0.2]) == 1.5

    def test_split_point_goes_right(self):
        eff = EffectTensor((0,), (np.array([0.5]),), np.array([-1.0, 1.0]))
        model = FanovaModel(0.0, {(0,): eff}, feature_names=["a"])
        assert evaluate(model, [0.5]) == 1.0
        assert evaluate(model, [np.nextafter(0.5, 0)]) == -1.0


class TestPurify:
    def test_one_two_three_four(self):
        out = purify(two_way([[1, 2], [3, 4]]))
        assert (0, 1) not in out.effects
        np.testing.assert_allclose(out.effects[(0,)].values, [-1, 1])
        np.testing.assert_allclose(out.effects[(1,)].values, [-0.5, 0.5])
        assert out.intercept == pytest.approx(2.5)

    def test_identity_pattern(self):
        out = purify(two_way([[1, 0], [0, 1]]))
        np.testing.assert_allclose(out.effects[(0, 1)].values, [[0.5, -0.5], [-0.5, 0.5]])
        assert (0,) not in out.effects and (1,) not in out.effects
        assert out.intercept == pytest.approx(0.5)

    def test_zero_tensor(self):
        model = two_way(np.zeros((3, 4)))
        out = purify(model)
        assert out.effects == {} and out.intercept == 0.0

    def test_point_mass_weights(self):
        def weights(features, axes):
            return np.array([[1.0, 0.0], [0.0, 0.0]]) if len(features) == 2 else np.array([1.0, 0.0])

        out = purify(two_way([[1, 0], [0, 1]]), weighting=weights)
        # hand computation with zero-weight slices moving nothing
        np.testing.assert_allclose(out.effects[(0, 1)].values, [[0, 0], [-1, 1]])
        np.testing.assert_allclose(out.effects[(1,)].values, [0, -1])
        assert (0,) not in out.effects
        assert out.intercept == pytest.approx(1.0)
        W = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert max_slice_mean(out.effects[(0, 1)], W) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(-100, 100)))
    def test_matches_double_centering(self, M):
        out = purify(two_way(M), tol=1e-12)
        inter, rows, cols, g = double_center(M)
        get = lambda k, s: out.effects[k].values if k in out.effects else np.zeros(s)
        np.testing.assert_allclose(get((0, 1), M.shape), inter, atol=1e-10)
        np.testing.assert_allclose(get((0,), M.shape[0]), rows, atol=1e-10)
        np.testing.assert_allclose(get((1,), M.shape[1]), cols, atol=1e-10)
        assert out.intercept == pytest.approx(g, abs=1e-10)

    def test_child_axes_are_refined(self):
        main = EffectTensor((0,), (np.array([0.25]),), np.array([1.0, 2.0]))
        pair = EffectTensor((0, 1), (np.array([0.5]), np.array([0.5])), np.array([[1.0, 2.0], [3.0, 5.0]]))
        model = FanovaModel(0.0, {(0,): main, (0, 1): pair}, feature_names=["a", "b"], domain=[[0, 1], [0, 1]])
        out = purify(model)
        np.testing.assert_array_equal(out.effects[(0,)].axes[0], [0.25, 0.5])
        X = np.random.default_rng(0).uniform(size=(500, 2))
        np.testing.assert_allclose(evaluate(out, X), evaluate(model, X), atol=1e-12)

    def test_non_convergence_warns(self):
        rng = np.random.default_rng(3)
        eff = EffectTensor((0, 1, 2), tuple(np.array([0.5]) for _ in range(3)), rng.normal(size=(2, 2, 2)))
        model = FanovaModel(0.0, {(0, 1, 2): eff}, feature_names=list("abc"))

        def skewed(features, axes):
            return rng.uniform(0.1, 1.0, size=tuple(a.size + 1 for a in axes))

        with pytest.warns(PurificationWarning):
            out = purify(model, weighting=skewed, max_iter=1, tol=1e-300)
        assert not out.info["converged"]
        X = rng.uniform(size=(200, 3))
        np.testing.assert_allclose(evaluate(out, X), evaluate(model, X), atol=1e-12)


@pytest.fixture(scope="module")
def case():
    rng = np.random.default_rng(42)
    model = random_ensemble(rng, 80, 3, 4)
    X = rng.uniform(size=(3000, 4))
    raw = aggregate(model, domain=np.array([[0.0, 1.0]] * 4))
    return model, X, raw


class TestPurifiedModel:
    def test_reconstruction(self, case):
        model, X, raw = case
        for weighting in ["uniform", "empirical"]:
            out = purify(raw, weighting=weighting, X=X)
            assert out.info["converged"]
            assert np.max(np.abs(evaluate(out, X) - predict_raw(model, X))) < 1e-9

    def test_zero_mean_uniform(self, case):
        _, _, raw = case
        out = purify(raw)
        assert max(max_slice_mean(e) for e in out.effects.values()) < 1e-10

    def test_zero_mean_empirical(self, case):
        _, X, raw = case
        out = purify(raw, weighting="empirical", X=X)
        assert max(max_slice_mean(e) for e in out.effects.values()) < 1e-10

    def test_orthogonality(self, case):
        _, _, raw = case
        out = purify(raw)
        keys = out.keys()
        worst = max(abs(inner_product(out, a, b)) for i, a in enumerate(keys) for b in keys[i + 1 :])
        assert worst < 1e-9

    def test_idempotent(self, case):
        _, _, raw = case
        once = purify(raw)
        twice = purify(once)
        assert abs(once.intercept - twice.intercept) < 1e-10
        assert set(once.effects) == set(twice.effects)
        for key in once.effects:
            np.testing.assert_allclose(twice.effects[key].values, once.effects[key].values, atol=1e-10)

    def test_json_round_trip(self, case):
        _, X, raw = case
        out = purify(raw)
        back = loads(dumps(out))
        assert dumps(back) == dumps(out)
        np.testing.assert_array_equal(evaluate(back, X), evaluate(out, X))

    @pytest.mark.parametrize("depth", [1, 2])
    def test_arity_bound(self, depth):
        model = random_ensemble(np.random.default_rng(depth), 40, depth, 5)
        out = purify(aggregate(model))
        assert max(len(k) for k in out.effects) <= depth


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3), st.sampled_from(["uniform", "empirical"]))
def test_reconstruction_property(seed, depth, weighting):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 6))
    model = random_ensemble(rng, int(rng.integers(1, 30)), depth, p)
    X = rng.uniform(size=(300, p))
    out = purify(aggregate(model, domain=np.array([[0.0, 1.0]] * p)), weighting=weighting, X=X)
    assert np.max(np.abs(evaluate(out, X) - predict_raw(model, X))) < 1e-9
    for eff in out.effects.values():
        assert max_slice_mean(eff) < 1e-9
