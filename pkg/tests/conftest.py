
import numpy as np
import pytest

from treefanova.boosting import TrainConfig, fit
from treefanova.data import Dataset, gen_friedman, split
from treefanova.ensemble import Ensemble, Leaf, Split



def random_tree(rng, depth, p, grid, box=None):
    """Random tree whose split values stay inside the branch's interval box."""
    box = box or {}
    if depth == 0 or rng.random() < 0.15:
        return Leaf(float(rng.normal()))
    f = int(rng.integers(p))
    lo, hi = box.get(f, (-np.inf, np.inf))
    choices = grid[f][(grid[f] > lo) & (grid[f] < hi)]
    if choices.size == 0:
        return Leaf(float(rng.normal()))
    s = float(rng.choice(choices))
    left = random_tree(rng, depth - 1, p, grid, {**box, f: (lo, s)})
    right = random_tree(rng, depth - 1, p, grid, {**box, f: (s, hi)})
    return Split(f, s, left, right)


def random_ensemble(rng, n_trees, depth, p, link="identity"):
    grid = [np.round(np.sort(rng.uniform(size=6)), 3) for _ in range(p)]
    trees = [random_tree(rng, depth, p, grid) for _ in range(n_trees)]
    weights = rng.uniform(0.05, 1.0, size=n_trees)
    return Ensemble(trees, weights, float(rng.normal()), link, [f"x{j + 1}" for j in range(p)])


@pytest.fixture(scope="session")
def friedman_splits():
    data = gen_friedman(2000, 0.1, seed=0)
    return split(data, (0.64, 0.16, 0.20), seed=0)


@pytest.fixture(scope="session")
def friedman_depth2(friedman_splits):
    train, valid, _ = friedman_splits
    cfg = TrainConfig(n_estimators=800, learning_rate=0.2, max_depth=2, l2=50.0, max_bins=64)
    model, _ = fit(train, valid, cfg)
    return model


@pytest.fixture
def small_regression():
    rng = np.random.default_rng(7)
    X = rng.uniform(size=(300, 4))
    y = 2 * X[:, 0] - X[:, 1] + np.sin(3 * X[:, 2]) * X[:, 3] + 0.05 * rng.normal(size=300)
    return Dataset(X, y, ["a", "b", "c", "d"])


def random_fanova(rng, p, n_effects=None, max_arity=3):
    """Random (unpurified) fANOVA model with effects of arity 1..max_arity."""
    from itertools import combinations

    from treefanova.fanova import EffectTensor, FanovaModel

    pool = [c for t in range(1, min(max_arity, p) + 1) for c in combinations(range(p), t)]
    n_effects = n_effects or int(rng.integers(1, len(pool) + 1))
    chosen = sorted(pool[i] for i in rng.choice(len(pool), size=min(n_effects, len(pool)), replace=False))
    effects = {}
    for key in chosen:
        axes = tuple(np.sort(rng.choice(np.linspace(0.05, 0.95, 19), size=rng.integers(1, 4), replace=False)) for _ in key)
        values = rng.normal(size=tuple(a.size + 1 for a in axes))
        effects[key] = EffectTensor(key, axes, values)
    return FanovaModel(float(rng.normal()), effects, feature_names=[f"x{j + 1}" for j in range(p)])


ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
