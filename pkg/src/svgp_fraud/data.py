"""
Dataset handling: CSV ingestion, standardization, stratified splits with an
optional rebalanced test set, the class-swapped "inverse" dataset, and
k-means inducing-point initialization.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InsufficientPositives, MissingColumn, MTooLarge, ParseError, SingleClass
from .svgp import InducingInputs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Standardization:
    columns: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        cols = list(self.columns)
        safe = np.where(self.std > 0, self.std, 1.0)
        X[:, cols] = np.where(self.std > 0, (X[:, cols] - self.mean) / safe, 0.0)
        return X

    def to_dict(self, names) -> dict:
        return {
            "columns": [names[c] for c in self.columns],
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, names) -> "Standardization":
        idx = {n: i for i, n in enumerate(names)}
        return cls(
            tuple(idx[c] for c in d["columns"]),
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["std"], dtype=float),
        )


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()
    standardization: Standardization | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError(f"X must be N x D and y length N, got {X.shape} and {y.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if np.any((y != 0) & (y != 1)):
            raise ValueError("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "feature_names", names)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def D(self) -> int:
        return self.X.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.y.sum())

    @property
    def prevalence(self) -> float:
        return self.n_positive / self.N if self.N else 0.0

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx])


def _parse_label(raw: str, row: int, column: str) -> int:
    s = raw.strip().strip('"').strip("'")
    try:
        v = float(s)
    except ValueError:
        raise ParseError(f"label {raw!r} is not numeric", row, column) from None
    if v not in (0.0, 1.0):
        raise ParseError(f"label {raw!r} is not 0 or 1", row, column)
    return int(v)


def load_csv(path, label_column: str = "Class") -> Dataset:
    """Read a headed, comma-delimited CSV; every non-label column is a feature.

    Row numbers in errors count data rows from 1 (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty") from None
        if label_column not in header:
            raise MissingColumn(f"label column {label_column!r} not in header")
        li = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != li]
        names = tuple(header[i] for i in feat_idx)
        rows, labels = [], []
        for r, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", r)
            labels.append(_parse_label(rec[li], r, label_column))
            vals = []
            for i in feat_idx:
                s = rec[i].strip().strip('"')
                try:
                    v = float(s)
                except ValueError:
                    raise ParseError(f"value {rec[i]!r} is not numeric", r, header[i]) from None
                if not np.isfinite(v):
                    raise ParseError(f"value {rec[i]!r} is not finite", r, header[i])
                vals.append(v)
            rows.append(vals)
    X = np.array(rows, dtype=float).reshape(len(rows), len(feat_idx))
    return Dataset(X, np.array(labels, dtype=np.int64), names)


def save_csv(d: Dataset, path, label_column: str = "Class") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(d.feature_names) + [label_column])
        for x, y in zip(d.X, d.y):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


def _select_columns(d: Dataset, columns) -> tuple[int, ...]:
    if columns is None:
        return tuple(range(d.D))
    out = []
    for c in columns:
        if isinstance(c, str):
            if c not in d.feature_names:
                raise MissingColumn(f"column {c!r} not in dataset")
            out.append(d.feature_names.index(c))
        else:
            out.append(int(c))
    return tuple(out)


def fit_standardization(d: Dataset, columns=None) -> Standardization:
    cols = _select_columns(d, columns)
    Xc = d.X[:, list(cols)]
    mean = Xc.mean(axis=0)
    std = Xc.std(axis=0)  # population stddev
    for c, s in zip(cols, std):
        if s == 0:
            warnings.warn(f"column {d.feature_names[c]!r} is constant; standardized to zeros")
    return Standardization(cols, mean, std)


def standardize(d: Dataset, columns=None, stats: Standardization | None = None) -> Dataset:
    """Standardize selected columns (all by default).

    Without ``stats`` the statistics are fitted on ``d`` (which should be the
    training set); pass the training statistics to transform test data.
    """
    if stats is None:
        stats = fit_standardization(d, columns)
    return replace(d, X=stats.apply(d.X), standardization=stats)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    test_fraud_ratio: float | None = 0.15
    seed: int = 0
    train_fraud_ratio: float | None = None

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        for r in (self.test_fraud_ratio, self.train_fraud_ratio):
            if r is not None and not 0 < r < 1:
                raise ValueError("fraud ratios must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "train_fraction": self.train_fraction,
            "test_fraud_ratio": self.test_fraud_ratio,
            "seed": self.seed,
            "train_fraud_ratio": self.train_fraud_ratio,
        }


def _rebalance(pos, neg, ratio, rng, what):
    """Keep all positives, undersample negatives so pos / total ~= ratio."""
    if len(pos) == 0:
        raise InsufficientPositives(f"no positives held out for the {what} set", 0.0)
    n_neg = int(round(len(pos) * (1 - ratio) / ratio))
    if n_neg > len(neg):
        # too few negatives: drop positives instead
        n_pos = int(round(len(neg) * ratio / (1 - ratio)))
        if n_pos < 1:
            raise InsufficientPositives(
                f"cannot build a {what} set at ratio {ratio}", len(pos) / (len(pos) + len(neg))
            )
        return np.sort(np.concatenate([rng.choice(pos, n_pos, replace=False), neg]))
    return np.sort(np.concatenate([pos, rng.choice(neg, n_neg, replace=False)]))


def split_indices(d: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([spec.seed, 1])
    train, test = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(d.y == cls)
        idx = idx[rng.permutation(len(idx))]
        k = int(round(spec.train_fraction * len(idx)))
        train.append(idx[:k])
        test.append(idx[k:])
    if spec.test_fraud_ratio is not None:
        test_idx = _rebalance(test[1], test[0], spec.test_fraud_ratio, rng, "test")
    else:
        test_idx = np.sort(np.concatenate(test))
    if spec.train_fraud_ratio is not None:
        train_idx = _rebalance(train[1], train[0], spec.train_fraud_ratio, rng, "train")
    else:
        train_idx = np.sort(np.concatenate(train))
    return train_idx, test_idx


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified split; optionally rebuild the test set at a fixed fraud ratio."""
    tr, te = split_indices(d, spec)
    return d.subset(tr), d.subset(te)


def inverse_dataset(d: Dataset, seed: int = 0) -> Dataset:
    """Resample so the class proportions are swapped, keeping N rows.

    Minority rows are drawn with replacement up to the majority count; the
    majority is subsampled without replacement down to the minority count.
    """
    pos, neg = np.flatnonzero(d.y == 1), np.flatnonzero(d.y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("inverse dataset needs both classes")
    rng = np.random.default_rng([seed, 2])
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    up = rng.choice(minority, len(majority), replace=True)
    down = rng.choice(majority, len(minority), replace=False)
    idx = np.concatenate([np.sort(up), np.sort(down)])
    return d.subset(idx)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

_KM_CHUNK = 16384


def _assign(X, C):
    """Nearest-centroid labels and squared distances, in row chunks."""
    labels = np.empty(X.shape[0], dtype=np.int64)
    d2 = np.empty(X.shape[0])
    cc = np.sum(C**2, axis=1)
    for s in range(0, X.shape[0], _KM_CHUNK):
        xs = X[s : s + _KM_CHUNK]
        D = np.sum(xs**2, axis=1)[:, None] - 2.0 * xs @ C.T + cc[None, :]
        lab = np.argmin(D, axis=1)
        labels[s : s + _KM_CHUNK] = lab
        # exact distance to the chosen centroid
        d2[s : s + _KM_CHUNK] = np.sum((xs - C[lab]) ** 2, axis=1)
    return labels, d2


def kmeans_pp(X, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            i = rng.choice(n, p=d2 / total)
        else:
            i = rng.integers(n)
        centers[j] = X[i]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def lloyd(X, centers, max_iters: int = 100):
    """Lloyd iterations to an assignment fixpoint. Returns (centers, labels, history)."""
    C = centers.copy()
    labels, d2 = _assign(X, C)
    history = [float(d2.sum())]
    for _ in range(max_iters):
        counts = np.bincount(labels, minlength=C.shape[0])
        sums = np.zeros_like(C)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        C[nonempty] = sums[nonempty] / counts[nonempty, None]
        new_labels, d2 = _assign(X, C)
        wcss = float(d2.sum())
        # Lloyd never increases the within-cluster sum of squares
        assert wcss <= history[-1] * (1 + 1e-9) + 1e-9, (wcss, history[-1])
        history.append(wcss)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return C, labels, history


def _dedupe(C, rng, scale=1e-6):
    C = C.copy()
    while True:
        _, first = np.unique(C, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(C.shape[0]), first)
        if dup.size == 0:
            return C
        C[dup] += scale * rng.standard_normal((dup.size, C.shape[1]))


def kmeans_init(d: Dataset, M: int, seed: int = 0, max_iters: int = 100) -> InducingInputs:
    """k-means++ seeding then Lloyd iterations; the M centroids become Z."""
    X = d.X if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if M > X.shape[0]:
        raise MTooLarge(f"M = {M} exceeds the {X.shape[0]} available points")
    if M < 1:
        raise MTooLarge("M must be at least 1")
    rng = np.random.default_rng([seed, 3])
    C, _, _ = lloyd(X, kmeans_pp(X, M, rng), max_iters)
    return InducingInputs(_dedupe(C, rng))
