"""Functional ANOVA representation of tree ensembles.

An ensemble of shallow trees is regrouped leaf by leaf into piecewise-constant
effect tensors, one per distinct set of split features, and then purified so
that every effect has zero (weighted) mean along each of its axes. All steps
preserve predictions exactly up to floating-point rounding.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import Ensemble, extract_leaf_rules
from .exceptions import ConfigError, ModelFormatError, UnsupportedArityError

MAX_ARITY = 3
ZERO_EFFECT = 1e-12


class PurificationWarning(UserWarning):
    pass


def cell_index(axis: np.ndarray, x) -> np.ndarray:
    """Cell of ``x`` on a split axis; cell ``i`` covers ``[axis[i-1], axis[i])``."""
    return np.searchsorted(axis, x, side="right")


def _refinement_map(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    # every cell of the finer axis lies inside exactly one coarse cell
    out = np.zeros(fine.size + 1, dtype=np.int64)
    out[1:] = np.searchsorted(coarse, fine, side="right")
    return out


@dataclass
class EffectTensor:
    """Piecewise-constant effect over the grid induced by ``axes``.

    ``values`` has shape ``(len(axes[0]) + 1, ...)``; ``weights`` (same shape,
    optional) holds the cell masses used when the effect was purified.
    """

    features: tuple
    axes: tuple
    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.features = tuple(int(f) for f in self.features)
        self.axes = tuple(np.asarray(a, dtype=np.float64) for a in self.axes)
        self.values = np.asarray(self.values, dtype=np.float64)
        if list(self.features) != sorted(set(self.features)):
            raise ConfigError(f"effect features must be sorted and distinct: {self.features}")
        if len(self.axes) != len(self.features):
            raise ConfigError("one axis per effect feature is required")
        for a in self.axes:
            if a.ndim != 1 or np.any(np.diff(a) <= 0) or not np.all(np.isfinite(a)):
                raise ConfigError("effect axes must be finite and strictly increasing")
        if self.values.shape != self.shape:
            raise ConfigError(f"values shape {self.values.shape} != grid shape {self.shape}")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != self.shape or np.any(self.weights < 0):
                raise ConfigError("weights must be non-negative and match the grid shape")

    @property
    def arity(self) -> int:
        return len(self.features)

    @property
    def shape(self) -> tuple:
        return tuple(a.size + 1 for a in self.axes)

    def cells(self, X) -> tuple:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return tuple(cell_index(a, X[:, f]) for a, f in zip(self.axes, self.features))

    def __call__(self, X) -> np.ndarray:
        return self.values[self.cells(X)]

    def copy(self) -> "EffectTensor":
        return EffectTensor(
            self.features,
            tuple(a.copy() for a in self.axes),
            self.values.copy(),
            None if self.weights is None else self.weights.copy(),
        )

    def refined(self, axes) -> "EffectTensor":
        """Same function on finer axes (each new axis must contain the old one)."""
        maps = [_refinement_map(old, new) for old, new in zip(self.axes, axes)]
        return EffectTensor(self.features, tuple(axes), self.values[np.ix_(*maps)])


@dataclass
class FanovaModel:
    intercept: float
    effects: dict
    link: str = "identity"
    feature_names: list = field(default_factory=list)
    domain: np.ndarray | None = None
    max_arity: int = MAX_ARITY
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_arity > MAX_ARITY:
            raise UnsupportedArityError(f"max_arity {self.max_arity} > {MAX_ARITY}")
        for key, eff in self.effects.items():
            if tuple(key) != eff.features:
                raise ConfigError(f"effect key {key} does not match its features {eff.features}")
            if eff.arity > self.max_arity:
                raise UnsupportedArityError(f"effect {key} exceeds max_arity {self.max_arity}")
        if self.domain is not None:
            self.domain = np.asarray(self.domain, dtype=np.float64)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def keys(self) -> list:
        """Effect keys ordered by arity, then lexicographically."""
        return sorted(self.effects, key=lambda k: (len(k), k))

    def effect_name(self, key) -> str:
        return " x ".join(self.feature_names[j] for j in key) if key else "intercept"

    def count_by_arity(self) -> dict:
        counts = {t: 0 for t in range(1, self.max_arity + 1)}
        for key in self.effects:
            counts[len(key)] += 1
        return counts

    def copy(self) -> "FanovaModel":
        return FanovaModel(
            float(self.intercept),
            {k: e.copy() for k, e in self.effects.items()},
            self.link,
            list(self.feature_names),
            None if self.domain is None else self.domain.copy(),
            self.max_arity,
            dict(self.info),
        )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def aggregate(model: Ensemble, domain=None) -> FanovaModel:
    """Regroup all leaves of ``model`` into raw (unpurified) effect tensors.

    Leaves whose decision path splits on a single feature feed that feature's
    main effect, two distinct features a pairwise tensor, and so on. The axes of
    an effect are the union of the split points used by its leaves. Split-free
    trees and ``base_score`` go to the intercept.

    ``domain`` is an optional ``(p, 2)`` array of feature ranges; by default it
    is taken from the model's training bin grid.
    """
    rules = extract_leaf_rules(model)
    unreachable = sum(not r.reachable for r in rules)
    if unreachable:
        warnings.warn(f"skipping {unreachable} unreachable leaves", stacklevel=2)
    rules = [r for r in rules if r.reachable]

    groups = {}
    intercept = float(model.base_score)
    for rule in rules:
        key = rule.features
        if not key:
            intercept += rule.value
            continue
        if len(key) > MAX_ARITY:
            raise UnsupportedArityError(
                f"leaf splits on {len(key)} distinct features; decomposition supports at most "
                f"{MAX_ARITY} (limit max_depth or use interaction constraints)"
            )
        groups.setdefault(key, []).append(rule)

    effects = {}
    for key in sorted(groups):
        group = groups[key]
        axes = []
        for j in key:
            bounds = {b for r in group for b in r.intervals[j] if math.isfinite(b)}
            axes.append(np.array(sorted(bounds), dtype=np.float64))
        values = np.zeros(tuple(a.size + 1 for a in axes))
        for rule in group:
            box = []
            for a, j in zip(axes, key):
                lo, hi = rule.intervals[j]
                start = 0 if lo == -math.inf else int(np.searchsorted(a, lo)) + 1
                stop = a.size + 1 if hi == math.inf else int(np.searchsorted(a, hi)) + 1
                box.append(slice(start, stop))
            values[tuple(box)] += rule.value
        effects[key] = EffectTensor(key, tuple(axes), values)

    if domain is None and model.bin_grid is not None:
        grid = model.bin_grid
        candidate = np.column_stack([grid.lower, grid.upper])
        if np.all(np.isfinite(candidate)):
            domain = candidate
    return FanovaModel(
        intercept,
        effects,
        model.link,
        list(model.feature_names),
        None if domain is None else np.asarray(domain, dtype=np.float64),
        info={"purified": False},
    )


# ---------------------------------------------------------------------------
# Purification
# ---------------------------------------------------------------------------


def cell_lengths(axis: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Lengths of the cells of ``axis`` clipped to ``[lo, hi]``."""
    edges = np.clip(np.concatenate([[lo], axis, [hi]]), lo, hi)
    return np.maximum(np.diff(edges), 0.0)


def _uniform_weights(model: FanovaModel):
    def weights(features, axes):
        if model.domain is None:
            return np.ones(tuple(a.size + 1 for a in axes))
        out = np.ones(())
        for f, a in zip(features, axes):
            lo, hi = model.domain[f]
            out = np.multiply.outer(out, cell_lengths(a, lo, hi))
        return out

    return weights


def _empirical_weights(X: np.ndarray):
    def weights(features, axes):
        shape = tuple(a.size + 1 for a in axes)
        idx = tuple(cell_index(a, X[:, f]) for a, f in zip(axes, features))
        flat = np.ravel_multi_index(idx, shape)
        return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape).astype(np.float64)

    return weights


def weighted_mean(values: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Weighted mean along ``axis``; slices with zero total weight get mean 0."""
    total = weights.sum(axis=axis)
    num = (weights * values).sum(axis=axis)
    out = np.zeros_like(num)
    np.divide(num, total, out=out, where=total > 0)
    return out


def _add_to_child(effects, key, axes, delta):
    current = effects.get(key)
    if current is None:
        effects[key] = EffectTensor(key, tuple(a.copy() for a in axes), delta.copy())
        return
    union = tuple(np.union1d(old, new) for old, new in zip(current.axes, axes))
    if any(u.size != old.size for u, old in zip(union, current.axes)):
        current = current.refined(union)
        effects[key] = current
    maps = [_refinement_map(a, u) for a, u in zip(axes, union)]
    current.values += delta[np.ix_(*maps)]


def purify(
    model: FanovaModel,
    weighting="uniform",
    X=None,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> FanovaModel:
    """Make every effect zero-mean along each axis, pushing means to children.

    Effects are processed from the highest arity down, in lexicographic key
    order. For each effect the dimensions are swept repeatedly: the weighted
    mean over one dimension is subtracted and added to the child effect lacking
    that feature (refining the child's axes where they differ). A sweep whose
    largest moved mean is below ``tol`` ends the loop. Main effects move their
    means into the intercept.

    ``weighting`` is ``"uniform"`` (cell lengths within the model domain, or
    equal cell masses when no domain is known), ``"empirical"`` (sample counts
    of ``X`` per cell), or a callable ``(features, axes) -> weights``.
    """
    if callable(weighting):
        weight_fn, name = weighting, "custom"
    elif weighting == "uniform":
        weight_fn, name = _uniform_weights(model), "uniform"
    elif weighting == "empirical":
        if X is None:
            raise ConfigError("empirical weighting needs the data matrix X")
        weight_fn, name = _empirical_weights(np.asarray(X, dtype=np.float64)), "empirical"
    else:
        raise ConfigError(f"unknown weighting {weighting!r}")

    out = model.copy()
    effects = out.effects
    intercept = out.intercept
    worst = 0.0
    for arity in range(out.max_arity, 0, -1):
        for key in sorted(k for k in effects if len(k) == arity):
            eff = effects[key]
            W = np.asarray(weight_fn(eff.features, eff.axes), dtype=np.float64)
            residual = math.inf
            for _ in range(max_iter):
                residual = 0.0
                for d in range(arity):
                    mean = weighted_mean(eff.values, W, d)
                    moved = float(np.max(np.abs(mean))) if mean.size else 0.0
                    if moved == 0.0:
                        continue
                    residual = max(residual, moved)
                    eff.values -= np.expand_dims(mean, d)
                    child = key[:d] + key[d + 1 :]
                    if child:
                        _add_to_child(effects, child, eff.axes[:d] + eff.axes[d + 1 :], mean)
                    else:
                        intercept += float(mean)
                if residual < tol:
                    break
            eff.weights = W
            worst = max(worst, residual)

    for key in [k for k, e in effects.items() if np.all(np.abs(e.values) < ZERO_EFFECT)]:
        del effects[key]
    out.intercept = intercept
    converged = worst < tol
    out.info = {
        "purified": True,
        "weighting": name,
        "tol": tol,
        "max_iter": max_iter,
        "residual": worst,
        "converged": converged,
    }
    if not converged:
        warnings.warn(
            f"purification stopped after {max_iter} sweeps with residual {worst:.3g}",
            PurificationWarning,
            stacklevel=2,
        )
    return out


def max_slice_mean(eff: EffectTensor, weights: np.ndarray | None = None) -> float:
    """Largest absolute weighted slice mean over all axes of ``eff``."""
    W = eff.weights if weights is None else weights
    if W is None:
        W = np.ones(eff.shape)
    return max(float(np.max(np.abs(weighted_mean(eff.values, W, d)))) for d in range(eff.arity))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def effect_matrix(model: FanovaModel, X) -> tuple[list, np.ndarray]:
    """Per-sample value of every effect, columns ordered as ``model.keys()``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ConfigError(f"expected {model.n_features} features, got {X.shape[1]}")
    keys = model.keys()
    out = np.empty((X.shape[0], len(keys)))
    for c, key in enumerate(keys):
        out[:, c] = model.effects[key](X)
    return keys, out


def evaluate(model: FanovaModel, x):
    """Intercept plus the sum of all effects at ``x`` (a vector or a matrix)."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    _, E = effect_matrix(model, X)
    out = model.intercept + E.sum(axis=1)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Orthogonality under the uniform measure
# ---------------------------------------------------------------------------


def _integrate_to(eff: EffectTensor, keep, domain) -> tuple:
    values = eff.values
    for d in range(eff.arity - 1, -1, -1):
        f = eff.features[d]
        if f in keep:
            continue
        lengths = cell_lengths(eff.axes[d], *domain[f])
        values = np.tensordot(values, lengths, axes=([d], [0]))
    kept_axes = [a for a, f in zip(eff.axes, eff.features) if f in keep]
    return values, kept_axes


def inner_product(model: FanovaModel, a, b) -> float:
    """Integral of ``f_a * f_b`` over the features of ``a`` and ``b``.

    The measure is Lebesgue on the model's feature domain (the empirical data
    range); unbounded end cells are clipped to it.
    """
    if model.domain is None:
        raise ConfigError("inner products need a model domain")
    ea, eb = model.effects[tuple(a)], model.effects[tuple(b)]
    shared = tuple(f for f in ea.features if f in eb.features)
    va, axes_a = _integrate_to(ea, shared, model.domain)
    vb, axes_b = _integrate_to(eb, shared, model.domain)
    if not shared:
        return float(va * vb)
    union = tuple(np.union1d(x, y) for x, y in zip(axes_a, axes_b))
    ra = va[np.ix_(*[_refinement_map(x, u) for x, u in zip(axes_a, union)])]
    rb = vb[np.ix_(*[_refinement_map(y, u) for y, u in zip(axes_b, union)])]
    measure = np.ones(())
    for f, u in zip(shared, union):
        measure = np.multiply.outer(measure, cell_lengths(u, *model.domain[f]))
    return float(np.sum(ra * rb * measure))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_dict(model: FanovaModel) -> dict:
    effects = []
    for key in model.keys():
        eff = model.effects[key]
        effects.append(
            {
                "features": list(key),
                "names": [model.feature_names[j] for j in key] if model.feature_names else [],
                "splits": [a.tolist() for a in eff.axes],
                "shape": list(eff.shape),
                "values": eff.values.ravel(order="C").tolist(),
                "weights": None if eff.weights is None else eff.weights.ravel(order="C").tolist(),
            }
        )
    return {
        "version": 1,
        "intercept": float(model.intercept),
        "link": model.link,
        "feature_names": list(model.feature_names),
        "domain": None if model.domain is None else model.domain.tolist(),
        "max_arity": model.max_arity,
        "info": model.info,
        "effects": effects,
    }


def from_dict(payload: dict) -> FanovaModel:
    try:
        effects = {}
        for item in payload["effects"]:
            key = tuple(item["features"])
            axes = tuple(np.asarray(s, dtype=np.float64) for s in item["splits"])
            shape = tuple(a.size + 1 for a in axes)
            values = np.asarray(item["values"], dtype=np.float64).reshape(shape)
            weights = item.get("weights")
            if weights is not None:
                weights = np.asarray(weights, dtype=np.float64).reshape(shape)
            effects[key] = EffectTensor(key, axes, values, weights)
        return FanovaModel(
            float(payload["intercept"]),
            effects,
            payload.get("link", "identity"),
            list(payload.get("feature_names", [])),
            payload.get("domain"),
            int(payload.get("max_arity", MAX_ARITY)),
            dict(payload.get("info", {})),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFormatError(f"invalid fANOVA JSON: {exc}") from None


def dumps(model: FanovaModel) -> bytes:
    return json.dumps(to_dict(model), sort_keys=True, separators=(",", ":")).encode("utf-8")


def loads(blob) -> FanovaModel:
    return from_dict(json.loads(blob))


def save(model: FanovaModel, path) -> None:
    Path(path).write_bytes(dumps(model))


def load(path) -> FanovaModel:
    return loads(Path(path).read_bytes())


def interpret(model: Ensemble, weighting="uniform", X=None, tol=1e-10, max_iter=100) -> FanovaModel:
    """Aggregate then purify: the full ensemble-to-fANOVA conversion."""
    return purify(aggregate(model), weighting=weighting, X=X, tol=tol, max_iter=max_iter)
