"""Dataset ingestion, quantile binning, splitting and the Friedman simulation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, IngestionError

TASKS = ("regression", "binary")
N_FRIEDMAN_FEATURES = 10


@dataclass
class Dataset:
    """A dense numeric design matrix with its target.

    ``metadata`` carries the category code tables produced by :func:`load_csv`
    (column name -> list of levels, code = position in the list).
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: list[str]
    task: str = "regression"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        if self.features.ndim != 2:
            raise ConfigError("features must be a 2-d array")
        n, p = self.features.shape
        if self.target.shape != (n,):
            raise ConfigError(f"target has shape {self.target.shape}, expected ({n},)")
        if len(self.feature_names) != p:
            raise ConfigError("feature_names does not match the number of columns")
        self.feature_names = [str(name) for name in self.feature_names]
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if n < 1 or p < 1:
            raise ConfigError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(self.features)) or not np.all(np.isfinite(self.target)):
            raise ConfigError("features and target must be finite")
        if self.task == "binary" and not np.all((self.target == 0) | (self.target == 1)):
            raise ConfigError("binary targets must be exactly 0 or 1")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(
            self.features[index],
            self.target[index],
            list(self.feature_names),
            self.task,
            dict(self.metadata),
        )

    def to_csv(self, path, target_name: str = "y") -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([*self.feature_names, target_name])
            for row, y in zip(self.features, self.target):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def _parse_float(text: str):
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def load_csv(path, target_column: str, task: str = "regression") -> Dataset:
    """Read a header-first UTF-8 CSV file into a :class:`Dataset`.

    Columns in which no cell parses as a number are treated as categorical and
    coded by sorted lexicographic order of their levels. A numeric column with a
    stray unparseable or empty cell is an ingestion error.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise IngestionError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if target_column not in header:
        raise ConfigError(f"target column {target_column!r} not in header {header}")
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise IngestionError(
                f"{path}: row {i + 2} has {len(row)} cells, header has {len(header)}"
            )

    columns = {}
    categories = {}
    for j, name in enumerate(header):
        cells = [row[j].strip() for row in body]
        parsed = [_parse_float(c) for c in cells]
        if all(v is None for v in parsed) and all(c != "" for c in cells):
            levels = sorted(set(cells))
            lookup = {level: code for code, level in enumerate(levels)}
            columns[name] = np.array([lookup[c] for c in cells], dtype=np.float64)
            categories[name] = levels
            continue
        for i, (cell, value) in enumerate(zip(cells, parsed)):
            if value is None or not math.isfinite(value):
                raise IngestionError(
                    f"{path}: cannot parse row {i + 2}, column {name!r}: {cell!r}"
                )
        columns[name] = np.array(parsed, dtype=np.float64)

    feature_names = [name for name in header if name != target_column]
    X = (
        np.column_stack([columns[name] for name in feature_names])
        if feature_names
        else np.empty((len(body), 0))
    )
    y = columns[target_column]
    if len(body) < 2:
        raise IngestionError(f"{path}: need at least 2 data rows, found {len(body)}")
    if task == "binary" and not np.all((y == 0) | (y == 1)):
        raise IngestionError(f"{path}: binary target {target_column!r} must be coded 0/1")
    return Dataset(X, y, feature_names, task, {"categories": categories, "source": str(path)})


def friedman_function(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )


def gen_friedman(n: int, sigma: float = 0.1, seed: int = 0) -> Dataset:
    """Friedman #1 regression data with 10 uniform covariates.

    Only x1..x5 enter the response; x6..x10 are noise features.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, N_FRIEDMAN_FEATURES))
    noise = rng.standard_normal(n)
    y = friedman_function(X) + sigma * noise
    names = [f"x{j + 1}" for j in range(N_FRIEDMAN_FEATURES)]
    return Dataset(X, y, names, "regression", {"generator": "friedman", "sigma": sigma, "seed": seed})


def split_sizes(n: int, fractions) -> tuple[int, int, int]:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ConfigError(f"need three positive fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)!r}")
    n_valid = int(round(n * fractions[1]))
    n_test = int(round(n * fractions[2]))
    return n - n_valid - n_test, n_valid, n_test


def split(data: Dataset, fractions=(0.64, 0.16, 0.20), seed: int = 0):
    """Random disjoint train/validation/test partition.

    Validation and test sizes are rounded to nearest; train takes the rest.
    """
    n_train, n_valid, _ = split_sizes(data.n_samples, fractions)
    perm = np.random.default_rng(seed).permutation(data.n_samples)
    parts = (
        np.sort(perm[:n_train]),
        np.sort(perm[n_train : n_train + n_valid]),
        np.sort(perm[n_train + n_valid :]),
    )
    return tuple(data.subset(idx) for idx in parts)


# ---------------------------------------------------------------------------
# Quantile binning
# ---------------------------------------------------------------------------


def _feature_splits(col: np.ndarray, max_bins: int) -> np.ndarray:
    values = np.unique(col)
    if values.size <= 1:
        return np.empty(0)
    if values.size <= max_bins:
        return (values[:-1] + values[1:]) / 2.0
    ordered = np.sort(col)
    n = ordered.size
    # nearest-rank quantile at level i/max_bins is the ceil(i*n/max_bins)-th value
    i = np.arange(1, max_bins, dtype=np.int64)
    ranks = (i * n + max_bins - 1) // max_bins
    q = np.unique(ordered[ranks - 1])
    upper = np.searchsorted(values, q, side="right")
    keep = upper < values.size
    return (q[keep] + values[upper[keep]]) / 2.0


@dataclass
class BinGrid:
    """Per-feature candidate split points and bin occupancy.

    Bin ``b`` of feature ``j`` holds values in ``[splits[j][b-1], splits[j][b])``
    with open ends, so a value equal to a split point lands right of it.
    """

    feature_names: list[str]
    splits: list[np.ndarray]
    counts: list[np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    max_bins: int

    @property
    def n_features(self) -> int:
        return len(self.splits)

    def n_bins(self) -> np.ndarray:
        return np.array([s.size + 1 for s in self.splits], dtype=np.int64)

    def densities(self) -> list[np.ndarray]:
        return [c / c.sum() for c in self.counts]

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Map raw values to bin indices, shape (p, n) for column-wise scans."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ConfigError(f"expected {self.n_features} columns, got shape {X.shape}")
        out = np.empty((X.shape[1], X.shape[0]), dtype=np.uint8)
        for j, s in enumerate(self.splits):
            out[j] = np.searchsorted(s, X[:, j], side="right")
        return out

    def to_json(self) -> list[dict]:
        return [
            {
                "feature": name,
                "splits": [float(v) for v in s],
                "counts": [int(c) for c in cnt],
                "min": float(lo),
                "max": float(hi),
            }
            for name, s, cnt, lo, hi in zip(
                self.feature_names, self.splits, self.counts, self.lower, self.upper
            )
        ]

    @classmethod
    def from_json(cls, payload: list[dict], max_bins: int | None = None) -> "BinGrid":
        splits = [np.asarray(d["splits"], dtype=np.float64) for d in payload]
        counts = [np.asarray(d["counts"], dtype=np.int64) for d in payload]
        for s, c in zip(splits, counts):
            if np.any(np.diff(s) <= 0) or c.size != s.size + 1:
                raise ConfigError("bin grid splits must increase and counts match bins")
        if max_bins is None:
            max_bins = max([s.size + 1 for s in splits], default=2)
        return cls(
            [d["feature"] for d in payload],
            splits,
            counts,
            np.array([d.get("min", np.nan) for d in payload], dtype=np.float64),
            np.array([d.get("max", np.nan) for d in payload], dtype=np.float64),
            int(max_bins),
        )


def build_bins(data: Dataset | np.ndarray, max_bins: int = 256, feature_names=None) -> BinGrid:
    """Quantile candidate splits for every feature.

    Features with at most ``max_bins`` distinct values split between every pair
    of neighbouring values; otherwise the split sits halfway between each
    nearest-rank quantile and the next distinct value above it.
    """
    if isinstance(data, Dataset):
        X, feature_names = data.features, data.feature_names
    else:
        X = np.asarray(data, dtype=np.float64)
        if feature_names is None:
            feature_names = [f"x{j + 1}" for j in range(X.shape[1])]
    if max_bins < 2:
        raise ConfigError("max_bins must be >= 2")
    if max_bins > 256:
        raise ConfigError("max_bins must be <= 256 (bins are stored as uint8)")
    splits, counts = [], []
    for j in range(X.shape[1]):
        s = _feature_splits(X[:, j], max_bins)
        splits.append(s)
        bins = np.searchsorted(s, X[:, j], side="right")
        counts.append(np.bincount(bins, minlength=s.size + 1).astype(np.int64))
    return BinGrid(
        list(feature_names),
        splits,
        counts,
        X.min(axis=0) if X.shape[0] else np.zeros(X.shape[1]),
        X.max(axis=0) if X.shape[0] else np.zeros(X.shape[1]),
        int(max_bins),
    )
