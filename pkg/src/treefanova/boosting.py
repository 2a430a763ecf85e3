"""Histogram gradient boosting with interpretability constraints.

Second-order boosting of shallow trees on quantile bins. Constraints available
at training time: maximum depth, monotone directions, interaction allow-lists,
L1/L2 leaf penalties, minimum leaf size, minimum split gain and early stopping.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numba
import numpy as np

from . import _kernels
from .data import Dataset, build_bins
from .ensemble import Ensemble, Leaf, Split
from .exceptions import ConfigError, TrainingError
from .metrics import auc, log_loss, rmse

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    n_estimators: int = 500
    learning_rate: float = 0.1
    max_depth: int = 2
    l1: float = 0.0
    l2: float = 1.0
    max_bins: int = 64
    monotone: dict = field(default_factory=dict)
    interaction_allow: list | None = None
    early_stopping_rounds: int = 50
    min_samples_leaf: int = 1
    min_gain: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 1 <= int(self.n_estimators) <= 3000:
            raise ConfigError(f"n_estimators must be in [1, 3000], got {self.n_estimators}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 1 <= int(self.max_depth) <= 5:
            raise ConfigError(f"max_depth must be in [1, 5], got {self.max_depth}")
        if self.l1 < 0 or self.l2 < 0 or self.min_gain < 0:
            raise ConfigError("l1, l2 and min_gain must be non-negative")
        if not 2 <= int(self.max_bins) <= 200:
            raise ConfigError(f"max_bins must be in [2, 200], got {self.max_bins}")
        if self.early_stopping_rounds < 1 or self.min_samples_leaf < 1:
            raise ConfigError("early_stopping_rounds and min_samples_leaf must be >= 1")
        for key, direction in self.monotone.items():
            if direction not in (-1, 0, 1):
                raise ConfigError(f"monotone direction for {key!r} must be -1, 0 or +1")
        if self.interaction_allow is not None:
            if any(len(group) == 0 for group in self.interaction_allow):
                raise ConfigError("interaction allow-sets must be non-empty")

    def to_json(self) -> str:
        payload = asdict(self)
        payload["monotone"] = {str(k): v for k, v in self.monotone.items()}
        return json.dumps(payload, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        payload = json.loads(text)
        unknown = set(payload) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        return cls(**payload)


@dataclass
class FitReport:
    train_curve: list
    valid_curve: list
    best_round: int
    final_metric: float
    metric: str = "rmse"

    def to_dict(self) -> dict:
        return asdict(self)


def _resolve_feature(key, names) -> int:
    if isinstance(key, (int, np.integer)):
        j = int(key)
    elif isinstance(key, str) and key in names:
        j = names.index(key)
    elif isinstance(key, str) and key.lstrip("-").isdigit():
        j = int(key)
    else:
        raise ConfigError(f"unknown feature {key!r}")
    if not 0 <= j < len(names):
        raise ConfigError(f"feature index {j} out of range")
    return j


def _constraint_arrays(cfg: TrainConfig, names: list[str]):
    p = len(names)
    mono = np.zeros(p, dtype=np.int8)
    for key, direction in cfg.monotone.items():
        mono[_resolve_feature(key, names)] = direction
    if cfg.interaction_allow is None:
        return mono, np.zeros((1, p), dtype=np.bool_), False
    allow = np.zeros((len(cfg.interaction_allow), p), dtype=np.bool_)
    for a, group in enumerate(cfg.interaction_allow):
        for key in group:
            allow[a, _resolve_feature(key, names)] = True
    return mono, allow, True


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _gradients(task, y, raw):
    if task == "regression":
        return raw - y, np.ones_like(y)
    prob = _sigmoid(raw)
    return prob - y, prob * (1.0 - prob)


def _loss(task, y, raw) -> float:
    if task == "regression":
        return rmse(y, raw)
    return log_loss(y, _sigmoid(raw))


def _to_node(feature, threshold, left, right, value, splits, node=0):
    if feature[node] < 0:
        return Leaf(float(value[node]))
    f = int(feature[node])
    return Split(
        f,
        float(splits[f][threshold[node]]),
        _to_node(feature, threshold, left, right, value, splits, left[node]),
        _to_node(feature, threshold, left, right, value, splits, right[node]),
    )


def set_threads(n_jobs: int | None) -> None:
    """Cap the compiled split search at ``n_jobs`` threads (None = all)."""
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n_jobs is None else max(1, min(int(n_jobs), limit)))


def fit(train: Dataset, valid: Dataset | None, cfg: TrainConfig, n_jobs: int | None = None):
    """Boost ``cfg.n_estimators`` trees, early-stopped on ``valid``.

    Returns the ensemble truncated to the best validation round and a
    :class:`FitReport` with per-round train/validation losses (RMSE for
    regression, log-loss for binary).
    """
    cfg.validate()
    if train.n_samples == 0:
        raise TrainingError("empty training set")
    y = train.target
    if train.task == "binary":
        rate = y.mean()
        if rate in (0.0, 1.0):
            raise TrainingError("binary target has a single class")
        base = math.log(rate / (1.0 - rate))
    else:
        base = float(y.mean())
    if valid is not None:
        if valid.feature_names != train.feature_names or valid.task != train.task:
            raise ConfigError("train and valid datasets do not share a schema")
        if valid.n_samples == 0:
            valid = None

    set_threads(n_jobs)
    grid = build_bins(train, cfg.max_bins)
    Xb = grid.transform(train.features)
    n_bins = grid.n_bins()
    mono, allow, use_allow = _constraint_arrays(cfg, train.feature_names)
    raw = np.full(train.n_samples, base)
    if valid is not None:
        Vb = grid.transform(valid.features)
        vraw = np.full(valid.n_samples, base)

    lr = float(cfg.learning_rate)
    grown = []
    train_curve, valid_curve = [], []
    best_loss, best_round = math.inf, 0
    for r in range(int(cfg.n_estimators)):
        grad, hess = _gradients(train.task, y, raw)
        feature, threshold, left, right, value, node_of = _kernels.grow_tree(
            Xb, grad, hess, n_bins, mono, allow, use_allow,
            int(cfg.max_depth), int(cfg.min_samples_leaf),
            float(cfg.l1), float(cfg.l2), float(cfg.min_gain),
        )
        grown.append((feature, threshold, left, right, value))
        raw += lr * value[node_of]
        train_curve.append(_loss(train.task, y, raw))
        if valid is None:
            best_round = r + 1
            continue
        vraw += lr * value[_kernels.route_binned(Vb, feature, threshold, left, right)]
        loss = _loss(valid.task, valid.target, vraw)
        valid_curve.append(loss)
        if loss < best_loss:
            best_loss, best_round = loss, r + 1
        elif r + 1 - best_round >= cfg.early_stopping_rounds:
            break

    trees = [_to_node(*g, grid.splits) for g in grown[:best_round]]
    model = Ensemble(
        trees,
        [lr] * len(trees),
        base,
        "logit" if train.task == "binary" else "identity",
        train.feature_names,
        grid,
    )
    final = valid_curve[best_round - 1] if valid_curve else train_curve[best_round - 1]
    report = FitReport(
        train_curve, valid_curve, best_round, float(final),
        "rmse" if train.task == "regression" else "logloss",
    )
    return model, report


def score(model: Ensemble, data: Dataset) -> float:
    """Higher-is-better metric: negative RMSE for regression, AUC for binary."""
    from .ensemble import predict_raw

    raw = predict_raw(model, data.features)
    if data.task == "regression":
        return -rmse(data.target, raw)
    return auc(data.target, raw)


# ---------------------------------------------------------------------------
# Random search
# ---------------------------------------------------------------------------

DEFAULT_SPACE = {
    "n_estimators": ("int", 50, 3000),
    "learning_rate": ("log", 0.01, 1.0),
    "l1": ("log", 0.001, 1000.0),
    "l2": ("log", 0.001, 1000.0),
    "max_bins": ("int", 2, 200),
}


@dataclass
class SearchResult:
    config: TrainConfig
    score: float
    trials: list

    @property
    def scores(self) -> np.ndarray:
        return np.array([t["score"] for t in self.trials])


def _sample(space, rng):
    draw = {}
    for name in sorted(space):
        kind, lo, hi = space[name]
        if kind == "int":
            draw[name] = int(rng.integers(lo, hi + 1))
        elif kind == "log":
            draw[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        elif kind == "uniform":
            draw[name] = float(rng.uniform(lo, hi))
        else:
            raise ConfigError(f"unknown search dimension kind {kind!r} for {name}")
    return draw


def random_search(
    train: Dataset,
    valid: Dataset,
    base: TrainConfig | None = None,
    space: dict | None = None,
    n_trials: int = 30,
    seed: int = 0,
    n_jobs: int | None = None,
) -> SearchResult:
    """Sample ``n_trials`` configurations and keep the best on ``valid``.

    Rates and penalties are drawn log-uniformly, counts uniformly; fields not in
    ``space`` come from ``base``. A trial that raises scores ``-inf``.
    """
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    base = base or TrainConfig()
    space = DEFAULT_SPACE if space is None else space
    rng = np.random.default_rng(seed)
    trials = []
    best = None
    for t in range(n_trials):
        params = _sample(space, rng)
        try:
            cfg = replace(base, **params)
            model, report = fit(train, valid, cfg, n_jobs=n_jobs)
            value = score(model, valid)
        except (ConfigError, TrainingError) as exc:
            logger.warning("trial %d failed: %s", t, exc)
            cfg, value, report = None, -math.inf, None
        trials.append(
            {
                "trial": t,
                "params": params,
                "score": value,
                "best_round": report.best_round if report else None,
            }
        )
        if cfg is not None and (best is None or value > best[1]):
            best = (cfg, value)
    if best is None:
        raise TrainingError("every random-search trial failed")
    return SearchResult(best[0], best[1], trials)


def merge(a: Dataset, b: Dataset) -> Dataset:
    return Dataset(
        np.vstack([a.features, b.features]),
        np.concatenate([a.target, b.target]),
        list(a.feature_names),
        a.task,
        dict(a.metadata),
    )


def tune(
    train: Dataset,
    valid: Dataset,
    base: TrainConfig | None = None,
    space: dict | None = None,
    n_trials: int = 30,
    seed: int = 0,
    n_jobs: int | None = None,
):
    """Random search on ``valid``, then refit on train + valid.

    The refit runs without early stopping for the number of rounds the winning
    configuration kept. Returns ``(model, final_config, search_result)``.
    """
    result = random_search(train, valid, base, space, n_trials, seed, n_jobs)
    _, report = fit(train, valid, result.config, n_jobs=n_jobs)
    final = replace(result.config, n_estimators=report.best_round)
    model, _ = fit(merge(train, valid), None, final, n_jobs=n_jobs)
    return model, final, result


def monotone_violation(
    model: Ensemble,
    feature: int,
    direction: int,
    X: np.ndarray,
    n_anchors: int = 50,
    n_grid: int = 256,
    seed: int = 0,
) -> float:
    """Largest step against ``direction`` along a grid in one feature.

    Anchors are rows of ``X`` drawn with ``seed``; the grid spans the observed
    range of the feature. Returns 0.0 when the model is monotone on every
    anchor line.
    """
    from .ensemble import predict_raw

    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    anchors = X[rng.integers(0, X.shape[0], size=n_anchors)]
    grid = np.linspace(X[:, feature].min(), X[:, feature].max(), n_grid)
    worst = 0.0
    for anchor in anchors:
        line = np.repeat(anchor[None, :], n_grid, axis=0)
        line[:, feature] = grid
        steps = np.diff(predict_raw(model, line)) * direction
        worst = max(worst, float(-steps.min(initial=0.0)))
    return worst
