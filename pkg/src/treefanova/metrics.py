"""Evaluation metrics."""

import numpy as np
from scipy.stats import rankdata


def rmse(y, pred) -> float:
    y, pred = np.asarray(y, dtype=np.float64), np.asarray(pred, dtype=np.float64)
    return float(np.sqrt(np.mean((y - pred) ** 2)))


def r2(y, pred) -> float:
    y, pred = np.asarray(y, dtype=np.float64), np.asarray(pred, dtype=np.float64)
    sst = np.sum((y - y.mean()) ** 2)
    sse = np.sum((y - pred) ** 2)
    if sst == 0.0:
        return 0.0 if sse == 0.0 else -np.inf
    return float(1.0 - sse / sst)


def log_loss(y, prob, eps: float = 1e-15) -> float:
    y = np.asarray(y, dtype=np.float64)
    prob = np.clip(np.asarray(prob, dtype=np.float64), eps, 1.0 - eps)
    return float(-np.mean(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)))


def auc(y, score) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic (ties averaged)."""
    y = np.asarray(y, dtype=np.float64)
    n_pos = int(np.sum(y == 1))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(score)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
