"""Small linear-model solvers used for effect pruning.

* ``lasso``: cyclic coordinate descent on ``(1/2n)||y - b0 - Xb||^2 + lam*||b||_1``.
* ``l1_logistic``: proximal Newton; each outer step solves the weighted
  quadratic bound of the mean log-loss by the same coordinate descent.
* ``ols`` / ``logistic``: unpenalized refits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000


@dataclass
class LinearFit:
    intercept: float
    coef: np.ndarray
    converged: bool = True
    n_iter: int = 0

    def decision(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X) @ self.coef


@numba.njit(cache=True)
def _cd(X, y, w, lam, beta, max_sweeps, tol):
    # minimizes (1/2) sum_i w_i (y_i - X_i beta)^2 / sum(w) + lam * |beta|_1
    # X and y are expected to be w-centered already.
    n, p = X.shape
    wsum = 0.0
    for i in range(n):
        wsum += w[i]
    r = y.copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    col_ss = np.zeros(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += w[i] * X[i, j] * X[i, j]
        col_ss[j] = acc / wsum
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            if col_ss[j] <= 0.0:
                continue
            acc = 0.0
            for i in range(n):
                acc += w[i] * X[i, j] * r[i]
            rho = acc / wsum + col_ss[j] * beta[j]
            if rho > lam:
                new = (rho - lam) / col_ss[j]
            elif rho < -lam:
                new = (rho + lam) / col_ss[j]
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                for i in range(n):
                    r[i] -= delta * X[i, j]
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return beta, sweep + 1, True
    return beta, max_sweeps, False


def _weighted_center(X, y, w):
    wsum = w.sum()
    xm = (w @ X) / wsum
    ym = float(w @ y) / wsum
    return X - xm, y - ym, xm, ym


def lasso(X, y, lam: float, start=None, tol=CD_TOL, max_sweeps=CD_MAX_SWEEPS) -> LinearFit:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones(X.shape[0])
    Xc, yc, xm, ym = _weighted_center(X, y, w)
    beta = np.zeros(X.shape[1]) if start is None else np.array(start, dtype=np.float64)
    if np.isinf(lam):
        return LinearFit(ym, np.zeros(X.shape[1]), True, 0)
    beta, sweeps, ok = _cd(np.ascontiguousarray(Xc), yc, w, float(lam), beta, max_sweeps, tol)
    return LinearFit(ym - float(xm @ beta), beta, ok, sweeps)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def l1_logistic(
    X, y, lam: float, start=None, tol=CD_TOL, max_sweeps=CD_MAX_SWEEPS, max_outer=100
) -> LinearFit:
    """Minimize mean log-loss + lam*||b||_1 with an unpenalized intercept."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    rate = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    b0 = float(np.log(rate / (1 - rate)))
    beta = np.zeros(p) if start is None else np.array(start, dtype=np.float64)
    if np.isinf(lam):
        return LinearFit(b0, np.zeros(p), True, 0)
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        eta = b0 + X @ beta
        prob = _sigmoid(eta)
        w = np.maximum(prob * (1.0 - prob), 1e-5)
        z = eta + (y - prob) / w
        Xc, zc, xm, zm = _weighted_center(X, z, w)
        old = np.concatenate([[b0], beta])
        # the quadratic bound is normalized by sum(w) inside _cd, the loss by n
        beta, _, _ = _cd(np.ascontiguousarray(Xc), zc, w, float(lam) * n / w.sum(), beta.copy(), max_sweeps, tol)
        b0 = zm - float(xm @ beta)
        if np.max(np.abs(np.concatenate([[b0], beta]) - old)) < tol:
            converged = True
            break
    return LinearFit(b0, beta, converged, it)


def lambda_max(X, y, task: str) -> float:
    """Smallest penalty with an all-zero solution."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] == 0:
        return 0.0
    y = np.asarray(y, dtype=np.float64)
    grad = (X - X.mean(axis=0)).T @ (y - y.mean()) / X.shape[0]
    return float(np.max(np.abs(grad)))


def ols(X, y) -> LinearFit:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[1] == 0:
        return LinearFit(float(y.mean()), np.zeros(0))
    xm, ym = X.mean(axis=0), y.mean()
    coef, *_ = np.linalg.lstsq(X - xm, y - ym, rcond=None)
    return LinearFit(float(ym - xm @ coef), coef)


def logistic(X, y, max_iter: int = 100, tol: float = 1e-10) -> LinearFit:
    """Unpenalized logistic regression by Newton-Raphson (IRLS)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.column_stack([np.ones(X.shape[0]), X])
    rate = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    theta = np.zeros(A.shape[1])
    theta[0] = np.log(rate / (1 - rate))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = _sigmoid(A @ theta)
        w = np.maximum(prob * (1.0 - prob), 1e-10)
        step, *_ = np.linalg.lstsq(A.T @ (A * w[:, None]), A.T @ (y - prob), rcond=None)
        theta = theta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    return LinearFit(float(theta[0]), theta[1:], converged, it)
