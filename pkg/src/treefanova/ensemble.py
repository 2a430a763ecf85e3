"""Weighted tree ensembles, leaf-rule compilation and model (de)serialization.

A tree routes a sample left iff ``x[feature] < split``. The ensemble output on
the link scale is ``base_score + sum_k weight_k * tree_k(x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numba
import numpy as np

from .data import BinGrid
from .exceptions import ConfigError, ModelFormatError

FORMAT_VERSION = 1
LINKS = ("identity", "logit")


@dataclass(frozen=True)
class Leaf:
    value: float


@dataclass(frozen=True)
class Split:
    feature: int
    split: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


def tree_leaves(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return tree_leaves(node.left) + tree_leaves(node.right)


@dataclass(frozen=True)
class LeafRule:
    """One leaf as a box of half-open intervals ``[lo, hi)`` per split feature.

    ``value`` already includes the tree weight. ``reachable`` is False when the
    decision path is self-contradictory (possible only in imported dumps).
    """

    value: float
    intervals: dict
    tree: int = 0
    reachable: bool = True

    @property
    def features(self) -> tuple:
        return tuple(sorted(self.intervals))

    def matches(self, x) -> bool:
        return all(lo <= x[j] < hi for j, (lo, hi) in self.intervals.items())


@dataclass(frozen=True, eq=False)
class Ensemble:
    trees: tuple
    weights: tuple
    base_score: float = 0.0
    link: str = "identity"
    feature_names: tuple = ()
    bin_grid: BinGrid | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if len(self.trees) != len(self.weights):
            raise ModelFormatError(
                f"{len(self.trees)} trees but {len(self.weights)} weights"
            )
        if not all(math.isfinite(w) for w in self.weights):
            raise ModelFormatError("tree weights must be finite")
        if not math.isfinite(self.base_score):
            raise ModelFormatError("base_score must be finite")
        if self.link not in LINKS:
            raise ModelFormatError(f"unknown link {self.link!r}")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def max_depth(self) -> int:
        return max((tree_depth(t) for t in self.trees), default=0)

    def __eq__(self, other):
        if not isinstance(other, Ensemble):
            return NotImplemented
        return serialize(self) == serialize(other)

    __hash__ = object.__hash__

    @cached_property
    def _flat(self):
        return _flatten(self.trees, self.n_features)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def _flatten(trees, n_features):
    feature, threshold, left, right, value, roots = [], [], [], [], [], []

    def visit(node):
        idx = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if isinstance(node, Leaf):
            value[idx] = float(node.value)
        else:
            if not 0 <= node.feature < max(n_features, 1):
                raise ModelFormatError(f"split on feature {node.feature} out of range")
            feature[idx] = node.feature
            threshold[idx] = float(node.split)
            left[idx] = visit(node.left)
            right[idx] = visit(node.right)
        return idx

    for tree in trees:
        roots.append(visit(tree))
    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(roots, dtype=np.int64),
    )


@numba.njit(cache=True)
def _predict_flat(X, feature, threshold, left, right, value, roots, weights, base):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        acc = base
        for k in range(roots.shape[0]):
            node = roots[k]
            while feature[node] >= 0:
                if X[i, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += weights[k] * value[node]
        out[i] = acc
    return out


def _as_matrix(model: Ensemble, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ConfigError(
            f"expected feature vectors of length {model.n_features}, got shape {np.shape(x)}"
        )
    return X, single


def predict_raw(model: Ensemble, x):
    """Link-scale prediction for one feature vector or a matrix of rows."""
    X, single = _as_matrix(model, x)
    if not np.all(np.isfinite(X)):
        raise ConfigError("feature values must be finite")
    out = _predict_flat(
        X, *model._flat, np.array(model.weights, dtype=np.float64), float(model.base_score)
    )
    return float(out[0]) if single else out


def predict(model: Ensemble, x):
    """Response-scale prediction (probability for the logit link)."""
    raw = predict_raw(model, x)
    if model.link == "logit":
        return 1.0 / (1.0 + np.exp(-raw))
    return raw


def leaf_indices(model: Ensemble, X) -> np.ndarray:
    """Flat node id of the leaf reached in every tree, shape (n, K)."""
    X, _ = _as_matrix(model, X)
    feature, threshold, left, right, _, roots = model._flat
    out = np.empty((X.shape[0], len(roots)), dtype=np.int64)
    for k, root in enumerate(roots):
        node = np.full(X.shape[0], root)
        while True:
            f = feature[node]
            active = f >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            go_left = X[rows, f[rows]] < threshold[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
        out[:, k] = node
    return out


# ---------------------------------------------------------------------------
# Leaf rules
# ---------------------------------------------------------------------------


def extract_leaf_rules(model: Ensemble) -> list[LeafRule]:
    """Compile every leaf into a :class:`LeafRule`, in tree order, left first.

    A left edge at ``s`` tightens the upper bound to ``min(hi, s)``; a right
    edge tightens the lower bound to ``max(lo, s)``. A split-free tree gives a
    rule with no intervals, i.e. a pure intercept contribution.
    """
    rules = []
    for k, (tree, weight) in enumerate(zip(model.trees, model.weights)):
        stack = [(tree, {})]
        while stack:
            node, box = stack.pop()
            if isinstance(node, Leaf):
                reachable = all(lo < hi for lo, hi in box.values())
                rules.append(LeafRule(weight * node.value, box, k, reachable))
                continue
            lo, hi = box.get(node.feature, (-math.inf, math.inf))
            right_box = dict(box)
            right_box[node.feature] = (max(lo, node.split), hi)
            left_box = dict(box)
            left_box[node.feature] = (lo, min(hi, node.split))
            # right pushed first so the left subtree is emitted first
            stack.append((node.right, right_box))
            stack.append((node.left, left_box))
    return rules


def rules_predict(model: Ensemble, rules: list[LeafRule], x) -> float:
    """Evaluate base_score plus the values of all rules matching ``x``."""
    acc = model.base_score
    for rule in rules:
        if rule.reachable and rule.matches(x):
            acc += rule.value
    return acc


# ---------------------------------------------------------------------------
# Native JSON format
# ---------------------------------------------------------------------------


def _node_to_json(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": float(node.value)}
    return {
        "feature": int(node.feature),
        "split": float(node.split),
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(obj, where: str, n_features: int) -> TreeNode:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{where}: expected an object")
    if "leaf" in obj:
        if set(obj) != {"leaf"}:
            raise ModelFormatError(f"{where}: leaf node carries extra keys {sorted(obj)}")
        value = float(obj["leaf"])
        if not math.isfinite(value):
            raise ModelFormatError(f"{where}: leaf value must be finite")
        return Leaf(value)
    if set(obj) != {"feature", "split", "left", "right"}:
        raise ModelFormatError(f"{where}: unknown node kind with keys {sorted(obj)}")
    feature = obj["feature"]
    if not isinstance(feature, int) or not 0 <= feature < n_features:
        raise ModelFormatError(f"{where}: feature index {feature!r} out of range")
    split = float(obj["split"])
    if not math.isfinite(split):
        raise ModelFormatError(f"{where}: split must be finite")
    return Split(
        feature,
        split,
        _node_from_json(obj["left"], where + ".left", n_features),
        _node_from_json(obj["right"], where + ".right", n_features),
    )


def to_dict(model: Ensemble) -> dict:
    payload = {
        "version": FORMAT_VERSION,
        "link": model.link,
        "base_score": float(model.base_score),
        "feature_names": list(model.feature_names),
        "max_depth": model.max_depth,
        "trees": [
            {"weight": w, "root": _node_to_json(t)} for t, w in zip(model.trees, model.weights)
        ],
    }
    if model.bin_grid is not None:
        payload["bin_grid"] = model.bin_grid.to_json()
    return payload


def from_dict(payload: dict) -> Ensemble:
    if not isinstance(payload, dict):
        raise ModelFormatError("model payload must be a JSON object")
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {version!r}, expected {FORMAT_VERSION}")
    try:
        names = list(payload["feature_names"])
        trees = [
            _node_from_json(t["root"], f"trees[{k}].root", len(names))
            for k, t in enumerate(payload["trees"])
        ]
        weights = [float(t.get("weight", 1.0)) for t in payload["trees"]]
        model = Ensemble(
            trees,
            weights,
            float(payload["base_score"]),
            payload["link"],
            names,
            BinGrid.from_json(payload["bin_grid"]) if "bin_grid" in payload else None,
        )
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc}") from None
    if "max_depth" in payload and payload["max_depth"] != model.max_depth:
        raise ModelFormatError(
            f"declared max_depth {payload['max_depth']!r} does not match trees ({model.max_depth})"
        )
    return model


def serialize(model: Ensemble) -> bytes:
    """Canonical JSON bytes: sorted keys, no whitespace, shortest float repr."""
    return json.dumps(to_dict(model), sort_keys=True, separators=(",", ":")).encode("utf-8")


def deserialize(blob: bytes | str) -> Ensemble:
    try:
        payload = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from None
    return from_dict(payload)


def save(model: Ensemble, path) -> None:
    Path(path).write_bytes(serialize(model))


def load(path) -> Ensemble:
    return deserialize(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# External tree dumps
# ---------------------------------------------------------------------------

# Field names of the nested-JSON dump convention (as produced by
# ``get_dump(dump_format="json")`` in common GBM libraries):
#   internal: {"nodeid", "split", "split_condition", "yes", "no", "missing", "children"}
#   leaf:     {"nodeid", "leaf"}
# "yes" is taken when x < split_condition.


def _dump_node(obj, where: str, names: list[str]) -> TreeNode:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{where}: expected an object")
    if "leaf" in obj:
        return Leaf(float(obj["leaf"]))
    required = ("split", "split_condition", "yes", "no", "children")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ModelFormatError(f"{where}: unknown node kind, missing {missing}")
    children = obj["children"]
    if not isinstance(children, list) or len(children) != 2:
        raise ModelFormatError(f"{where}.children: expected exactly 2 children (binary tree)")
    by_id = {}
    for c, child in enumerate(children):
        if not isinstance(child, dict) or "nodeid" not in child:
            raise ModelFormatError(f"{where}.children[{c}]: child without nodeid")
        by_id[child["nodeid"]] = (c, child)
    yes, no = obj["yes"], obj["no"]
    if yes not in by_id or no not in by_id or yes == no:
        raise ModelFormatError(f"{where}: yes/no pointers {yes!r}/{no!r} do not match children")
    if "missing" in obj and obj["missing"] != yes:
        raise ModelFormatError(
            f"{where}: missing branch {obj['missing']!r} differs from yes branch {yes!r}"
        )
    feature = obj["split"]
    if isinstance(feature, str):
        if feature in names:
            feature = names.index(feature)
        elif feature.startswith("f") and feature[1:].isdigit():
            feature = int(feature[1:])
        else:
            raise ModelFormatError(f"{where}.split: unknown feature {feature!r}")
    if not isinstance(feature, int) or not 0 <= feature < len(names):
        raise ModelFormatError(f"{where}.split: feature {feature!r} out of range")
    yes_c, yes_node = by_id[yes]
    no_c, no_node = by_id[no]
    return Split(
        feature,
        float(obj["split_condition"]),
        _dump_node(yes_node, f"{where}.children[{yes_c}]", names),
        _dump_node(no_node, f"{where}.children[{no_c}]", names),
    )


def _link_from_objective(objective: str) -> str:
    objective = (objective or "").lower()
    if "binary" in objective or "logistic" in objective or "logit" in objective:
        return "logit"
    return "identity"


def import_tree_dump(path, feature_names=None) -> Ensemble:
    """Read a nested-JSON GBM dump into an :class:`Ensemble`.

    The file is either a bare list of tree objects, or an object with
    ``trees`` and optional ``objective``, ``base_score``, ``feature_names``,
    ``tree_weights`` and ``n_features``. Trees may also be JSON strings.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read tree dump {path}: {exc}") from None
    if isinstance(payload, list):
        payload = {"trees": payload}
    if not isinstance(payload, dict) or "trees" not in payload:
        raise ModelFormatError("$: expected a list of trees or an object with 'trees'")
    trees = [json.loads(t) if isinstance(t, str) else t for t in payload["trees"]]

    names = feature_names or payload.get("feature_names")
    if names is None:
        n_features = payload.get("n_features")
        if n_features is None:
            n_features = 1 + max(
                (_max_feature(t) for t in trees), default=-1
            )
        names = [f"f{j}" for j in range(n_features)]
    names = list(names)

    roots = [_dump_node(t, f"$.trees[{k}]", names) for k, t in enumerate(trees)]
    weights = payload.get("tree_weights") or [1.0] * len(roots)
    if len(weights) != len(roots):
        raise ModelFormatError("$.tree_weights: length differs from number of trees")
    return Ensemble(
        roots,
        weights,
        float(payload.get("base_score", 0.0)),
        _link_from_objective(payload.get("objective", "")),
        names,
    )


def _max_feature(tree) -> int:
    best = -1
    stack = [tree]
    while stack:
        node = stack.pop()
        if not isinstance(node, dict):
            continue
        split = node.get("split")
        if isinstance(split, str) and split.startswith("f") and split[1:].isdigit():
            best = max(best, int(split[1:]))
        elif isinstance(split, int):
            best = max(best, split)
        stack.extend(node.get("children", []))
    return best


def export_tree_dump(model: Ensemble) -> dict:
    """Inverse of :func:`import_tree_dump` (nested dump convention)."""
    trees = []
    for tree in model.trees:
        counter = [0]

        def visit(node, depth):
            nid = counter[0]
            counter[0] += 1
            if isinstance(node, Leaf):
                return {"nodeid": nid, "leaf": node.value}
            left = visit(node.left, depth + 1)
            right = visit(node.right, depth + 1)
            return {
                "nodeid": nid,
                "depth": depth,
                "split": f"f{node.feature}",
                "split_condition": node.split,
                "yes": left["nodeid"],
                "no": right["nodeid"],
                "missing": left["nodeid"],
                "children": [left, right],
            }

        trees.append(visit(tree, 0))
    return {
        "objective": "binary:logistic" if model.link == "logit" else "reg:squarederror",
        "base_score": model.base_score,
        "feature_names": list(model.feature_names),
        "tree_weights": list(model.weights),
        "trees": trees,
    }
