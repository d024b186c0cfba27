"""Synthetic stand-ins for the fraud data, used by tests and smoke runs."""

from __future__ import annotations

import numpy as np

from .data import Dataset


def make_blobs(n: int = 400, prevalence: float = 0.15, d: int = 2, sep: float = 1.5, seed: int = 0) -> Dataset:
    """Two isotropic unit-variance Gaussians at -sep and +sep on every axis.

    The positive class is the minority, with ``round(n * prevalence)`` rows.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * prevalence))
    y = np.zeros(n, dtype=np.int64)
    y[rng.choice(n, n_pos, replace=False)] = 1
    centers = np.where(y[:, None] == 1, sep, -sep) * np.ones((n, d))
    X = centers + rng.standard_normal((n, d))
    return Dataset(X, y, tuple(f"x{i}" for i in range(d)))


def make_fraud_like(n: int = 5000, prevalence: float = 0.00172, d: int = 30, seed: int = 0) -> Dataset:
    """Heavily imbalanced data shaped like the ULB table (Time, V1..V28, Amount).

    Positives are shifted along a handful of the PCA-like columns and carry a
    heavier-tailed ``Amount``; negatives are standard normal.
    """
    rng = np.random.default_rng(seed)
    n_pos = max(1, int(round(n * prevalence)))
    y = np.zeros(n, dtype=np.int64)
    y[rng.choice(n, n_pos, replace=False)] = 1
    X = rng.standard_normal((n, d))
    shift = np.zeros(d)
    shift[1:8] = rng.choice([-1.0, 1.0], 7) * 2.5
    X[y == 1] += shift
    X[:, 0] = np.sort(rng.uniform(0, 172_792, n))
    X[:, -1] = np.round(rng.lognormal(3.0, 1.2 + 0.5 * y), 2)
    names = ("Time",) + tuple(f"V{i}" for i in range(1, d - 1)) + ("Amount",)
    return Dataset(X, y, names[:d])
