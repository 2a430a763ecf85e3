"""Post-hoc effect pruning.

Each purified effect is a column of a design matrix. A sparse linear surrogate
(Lasso, or L1 logistic regression) picks a rough support, FBEDk refines it, and
an unpenalized GLM refit rescales the surviving effects. Effect shapes never
change, only their scale.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linear
from .data import Dataset
from .exceptions import ConfigError
from .fanova import EffectTensor, FanovaModel, effect_matrix
from .metrics import auc, r2

logger = logging.getLogger(__name__)


class PruningWarning(UserWarning):
    pass


@dataclass
class EffectDesign:
    """Centered effect columns; ``matrix + offsets`` recovers raw effect values."""

    matrix: np.ndarray
    keys: list
    target: np.ndarray
    task: str
    offsets: np.ndarray
    intercept: float = 0.0

    @property
    def raw(self) -> np.ndarray:
        return self.matrix + self.offsets

    @property
    def n_effects(self) -> int:
        return len(self.keys)


@dataclass
class PathEntry:
    lam: float
    n_selected: int
    cv_metric: float
    converged: bool = True
    coef: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "n_selected": self.n_selected,
            "cv_metric": self.cv_metric,
            "converged": self.converged,
        }


@dataclass
class PruneConfig:
    lam: float | None = None
    slack: float = 0.01
    k: int = 2
    threshold: float = 0.001
    folds: int = 5
    seed: int = 0
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-4


@dataclass
class PruneResult:
    selected: list
    coefficients: dict
    intercept: float
    cv_metric: float
    path: list
    lam: float
    lasso_support: list
    metric: str = "r2"

    def to_dict(self, model: FanovaModel | None = None) -> dict:
        def name(k):
            return model.effect_name(k) if model is not None else str(k)

        return {
            "metric": self.metric,
            "lambda": self.lam,
            "cv_metric": self.cv_metric,
            "intercept": self.intercept,
            "lasso_support": [list(k) for k in self.lasso_support],
            "selected": [
                {"features": list(k), "name": name(k), "coefficient": self.coefficients[k]}
                for k in self.selected
            ],
            "path": [e.to_dict() for e in self.path],
        }


def build_design(model: FanovaModel, data: Dataset) -> EffectDesign:
    keys, E = effect_matrix(model, data.features)
    offsets = E.mean(axis=0) if keys else np.zeros(0)
    return EffectDesign(E - offsets, keys, data.target.copy(), data.task, offsets, float(model.intercept))


# ---------------------------------------------------------------------------
# Cross-validation helpers
# ---------------------------------------------------------------------------


def fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    if folds < 2 or folds > n:
        raise ConfigError(f"folds must be in [2, n]; got {folds} for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=np.int64)
    for f, part in enumerate(np.array_split(perm, folds)):
        ids[part] = f
    return ids


def _metric(task, y, score) -> float:
    return r2(y, score) if task == "regression" else auc(y, score)


def _fit_unpenalized(task, X, y) -> linear.LinearFit:
    return linear.ols(X, y) if task == "regression" else linear.logistic(X, y)


class _SubsetScorer:
    """Cached mean CV metric of an unpenalized GLM on a subset of columns."""

    def __init__(self, design: EffectDesign, folds: int, seed: int):
        self.design = design
        self.ids = fold_ids(len(design.target), folds, seed)
        self.folds = folds
        self.cache = {}

    def __call__(self, subset) -> float:
        key = tuple(sorted(subset))
        if key not in self.cache:
            X = self.design.matrix[:, list(key)]
            y = self.design.target
            scores = []
            for f in range(self.folds):
                test = self.ids == f
                fitted = _fit_unpenalized(self.design.task, X[~test], y[~test])
                scores.append(_metric(self.design.task, y[test], fitted.decision(X[test])))
            self.cache[key] = float(np.mean(scores))
        return self.cache[key]


# ---------------------------------------------------------------------------
# Sparse surrogate
# ---------------------------------------------------------------------------


def _l1_fit(task, X, y, lam, start=None) -> linear.LinearFit:
    if task == "regression":
        return linear.lasso(X, y, lam, start=start)
    return linear.l1_logistic(X, y, lam, start=start)


def default_lambdas(design: EffectDesign, n_lambdas: int = 50, ratio: float = 1e-4) -> np.ndarray:
    top = linear.lambda_max(design.matrix, design.target, design.task)
    if top <= 0:
        return np.array([1.0])
    return np.geomspace(top, top * ratio, n_lambdas)


def lasso_path(design: EffectDesign, lambdas=None, folds: int = 5, seed: int = 0) -> list:
    """L1 fits along a descending penalty grid with K-fold CV.

    Each entry records the support size of the full-data fit and the mean
    held-out metric (R^2 or AUC). Folds warm-start along the path.
    """
    if lambdas is None:
        lambdas = default_lambdas(design)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if np.any(lambdas <= 0) or np.any(np.diff(lambdas) > 0):
        raise ConfigError("lambdas must be positive and descending")
    X, y, task = design.matrix, design.target, design.task
    ids = fold_ids(len(y), folds, seed)
    warm_full = None
    warm_fold = [None] * folds
    path = []
    for lam in lambdas:
        full = _l1_fit(task, X, y, lam, warm_full)
        warm_full = full.coef
        scores = []
        converged = full.converged
        for f in range(folds):
            test = ids == f
            fitted = _l1_fit(task, X[~test], y[~test], lam, warm_fold[f])
            warm_fold[f] = fitted.coef
            converged = converged and fitted.converged
            scores.append(_metric(task, y[test], fitted.decision(X[test])))
        if not converged:
            logger.warning("coordinate descent did not converge at lambda=%g", lam)
        path.append(
            PathEntry(float(lam), int(np.count_nonzero(full.coef)), float(np.mean(scores)), converged, full.coef.copy())
        )
    return path


# ---------------------------------------------------------------------------
# FBEDk
# ---------------------------------------------------------------------------


def fbed(
    design: EffectDesign,
    init=(),
    k: int = 2,
    threshold: float = 0.001,
    folds: int = 5,
    seed: int = 0,
    scorer=None,
) -> list:
    """Forward-backward selection with early dropping over design columns.

    ``init`` and the result are column indices. Each of the ``k`` forward
    rounds restarts its candidate pool from the unselected columns, then
    repeatedly drops candidates whose CV gain is at most ``threshold`` and adds
    the best remaining one. The backward pass visits selected columns from the
    least significant (smallest ``|coef| * std``) and removes those whose
    removal costs at most ``threshold`` relative to the post-forward score.
    """
    if threshold < 0:
        raise ConfigError("threshold must be non-negative")
    scorer = scorer or _SubsetScorer(design, folds, seed)
    selected = sorted(set(int(c) for c in init))
    current = scorer(selected)
    for _ in range(k):
        pool = [c for c in range(design.n_effects) if c not in selected]
        while pool:
            gains = {c: scorer(selected + [c]) - current for c in pool}
            pool = [c for c in pool if gains[c] > threshold]
            if not pool:
                break
            best = max(pool, key=lambda c: (gains[c], -c))
            selected = sorted(selected + [best])
            current = scorer(selected)
            pool.remove(best)

    if selected:
        peak = current
        fitted = _fit_unpenalized(design.task, design.matrix[:, selected], design.target)
        spread = design.matrix[:, selected].std(axis=0)
        significance = np.abs(fitted.coef) * spread
        order = [selected[i] for i in np.argsort(significance, kind="stable")]
        for c in order:
            trial = [s for s in selected if s != c]
            if peak - scorer(trial) <= threshold:
                selected = trial
    return selected


# ---------------------------------------------------------------------------
# Hybrid pipeline
# ---------------------------------------------------------------------------


def _choose_lambda(path: list, slack: float) -> PathEntry:
    best = max(e.cv_metric for e in path)
    eligible = [e for e in path if e.cv_metric >= best - slack]
    return max(eligible, key=lambda e: e.lam)


def refit(design: EffectDesign, selected: list) -> linear.LinearFit:
    """Unpenalized GLM on the raw (uncentered) selected effect columns."""
    return _fit_unpenalized(design.task, design.raw[:, selected], design.target)


def apply_coefficients(model: FanovaModel, keys: list, coef, intercept: float) -> FanovaModel:
    effects = {}
    for key, c in zip(keys, coef):
        eff = model.effects[key]
        effects[key] = EffectTensor(
            key,
            tuple(a.copy() for a in eff.axes),
            eff.values * float(c),
            None if eff.weights is None else eff.weights.copy(),
        )
    info = dict(model.info)
    info["pruned"] = True
    return FanovaModel(
        float(intercept), effects, model.link, list(model.feature_names),
        None if model.domain is None else model.domain.copy(), model.max_arity, info,
    )


def prune(model: FanovaModel, data: Dataset, cfg: PruneConfig | None = None):
    """Lasso screening, FBEDk refinement and GLM refit of a purified model.

    The penalty is ``cfg.lam`` when given, otherwise the largest grid value
    whose CV metric is within ``cfg.slack`` of the best. An empty Lasso support
    yields an intercept-only model.
    """
    cfg = cfg or PruneConfig()
    design = build_design(model, data)
    metric = "r2" if design.task == "regression" else "auc"
    if design.n_effects == 0:
        fitted = refit(design, [])
        warnings.warn("model has no effects to prune", PruningWarning, stacklevel=2)
        return apply_coefficients(model, [], [], fitted.intercept), PruneResult(
            [], {}, fitted.intercept, float("nan"), [], math.inf, [], metric
        )

    lambdas = default_lambdas(design, cfg.n_lambdas, cfg.lambda_min_ratio)
    path = lasso_path(design, lambdas, cfg.folds, cfg.seed)
    if cfg.lam is None:
        chosen = _choose_lambda(path, cfg.slack)
        lam, coef = chosen.lam, chosen.coef
    else:
        lam = float(cfg.lam)
        if lam < 0:
            raise ConfigError("lambda must be non-negative")
        coef = _l1_fit(design.task, design.matrix, design.target, lam).coef
    support = [int(c) for c in np.flatnonzero(coef)]

    scorer = _SubsetScorer(design, cfg.folds, cfg.seed)
    if not support:
        warnings.warn(
            f"no effect survives the sparse surrogate at lambda={lam:g}; returning an intercept-only model",
            PruningWarning,
            stacklevel=2,
        )
        selected = []
    else:
        selected = fbed(design, support, cfg.k, cfg.threshold, cfg.folds, cfg.seed, scorer=scorer)
    fitted = refit(design, selected)
    keys = [design.keys[c] for c in selected]
    pruned = apply_coefficients(model, keys, fitted.coef, fitted.intercept)
    result = PruneResult(
        keys,
        {k: float(c) for k, c in zip(keys, fitted.coef)},
        float(fitted.intercept),
        scorer(selected),
        path,
        lam,
        [design.keys[c] for c in support],
        metric,
    )
    return pruned, result
