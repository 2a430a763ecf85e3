"""Local and global attributions of a purified fANOVA model.

Feature contributions split every interaction evenly among its features, which
is the Shapley value under the coalition value ``v(S) = mu + sum_{T <= S} f_T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import ConfigError
from .fanova import FanovaModel, effect_matrix

MAX_ORACLE_FEATURES = 12


@dataclass
class Attribution:
    intercept: float
    effect_contributions: dict
    feature_contributions: np.ndarray
    prediction: float
    response: float | None = None

    def to_dict(self, model: FanovaModel) -> dict:
        return {
            "intercept": self.intercept,
            "prediction": self.prediction,
            "response": self.response,
            "effects": [
                {"features": list(k), "name": model.effect_name(k), "contribution": v}
                for k, v in self.effect_contributions.items()
            ],
            "features": [
                {"name": name, "contribution": float(z)}
                for name, z in zip(model.feature_names, self.feature_contributions)
            ],
        }


@dataclass
class ImportanceReport:
    effect_importance: dict
    feature_importance: np.ndarray
    n_samples: int

    def to_dict(self, model: FanovaModel) -> dict:
        effects = sorted(self.effect_importance.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
        order = np.argsort(-self.feature_importance, kind="stable")
        return {
            "n_samples": self.n_samples,
            "effects": [
                {"features": list(k), "name": model.effect_name(k), "importance": v}
                for k, v in effects
            ],
            "features": [
                {"name": model.feature_names[j], "importance": float(self.feature_importance[j])}
                for j in order
            ],
        }


def feature_contributions(model: FanovaModel, X) -> np.ndarray:
    """z_j for every row of ``X``: each effect shared equally by its features."""
    keys, E = effect_matrix(model, X)
    Z = np.zeros((E.shape[0], model.n_features))
    for c, key in enumerate(keys):
        share = E[:, c] / len(key)
        for j in key:
            Z[:, j] += share
    return Z


def attribute_local(model: FanovaModel, x) -> Attribution:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ConfigError(f"expected a vector of {model.n_features} features, got {x.shape}")
    keys, E = effect_matrix(model, x[None, :])
    contributions = {k: float(v) for k, v in zip(keys, E[0])}
    prediction = model.intercept + float(E[0].sum())
    response = 1.0 / (1.0 + math.exp(-prediction)) if model.link == "logit" else None
    return Attribution(
        float(model.intercept),
        contributions,
        feature_contributions(model, x[None, :])[0],
        prediction,
        response,
    )


def shapley_oracle(model: FanovaModel, x) -> np.ndarray:
    """Exact Shapley values by enumerating all 2^p coalitions."""
    p = model.n_features
    if p > MAX_ORACLE_FEATURES:
        raise ConfigError(f"oracle enumerates 2^p coalitions; p={p} > {MAX_ORACLE_FEATURES}")
    x = np.asarray(x, dtype=np.float64)
    keys, E = effect_matrix(model, x[None, :])
    masks = [sum(1 << j for j in key) for key in keys]
    value = np.full(1 << p, model.intercept)
    for S in range(1 << p):
        for mask, contribution in zip(masks, E[0]):
            if mask & S == mask:
                value[S] += contribution
    factorial = [math.factorial(k) for k in range(p + 1)]
    phi = np.zeros(p)
    for j in range(p):
        bit = 1 << j
        for S in range(1 << p):
            if S & bit:
                continue
            size = bin(S).count("1")
            coef = factorial[size] * factorial[p - size - 1] / factorial[p]
            phi[j] += coef * (value[S | bit] - value[S])
    return phi


def global_importance(model: FanovaModel, data: Dataset | np.ndarray) -> ImportanceReport:
    """Normalized population variances of effect and feature contributions."""
    X = data.features if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if X.shape[0] < 2:
        raise ConfigError("global importance needs at least 2 samples")
    keys, E = effect_matrix(model, X)
    effect_var = E.var(axis=0) if keys else np.zeros(0)
    feature_var = feature_contributions(model, X).var(axis=0)

    def normalize(v):
        total = v.sum()
        return v / total if total > 0 else np.zeros_like(v)

    return ImportanceReport(
        {k: float(v) for k, v in zip(keys, normalize(effect_var))},
        normalize(feature_var),
        int(X.shape[0]),
    )
