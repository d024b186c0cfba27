"""
Dense symmetric linear algebra with a jitter-escalating Cholesky.

Everything here is small and dense (minibatches of ~100 rows, at most a few
hundred inducing points), so we lean on LAPACK through numpy/scipy and only
add the bookkeeping the rest of the package relies on: symmetric input
checks, an explicit jitter ladder, and a validated lower-triangular factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite

SYMMETRY_RTOL = 1e-12

# Jitter ladder, as multiples of mean(diag A). The first rung is exact (no jitter).
JITTER_START = 1e-8
JITTER_FACTOR = 10.0
JITTER_MAX = 1e-2


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def check_symmetric(A, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    A = _as_square(A)
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    if np.max(np.abs(A - A.T)) > rtol * scale:
        raise DimensionMismatch("matrix is not symmetric")
    return A


@dataclass(frozen=True)
class LowerTriangular:
    """A lower-triangular factor with strictly positive diagonal.

    ``jitter`` records the diagonal shift that was needed to produce it
    (zero for factors built directly).
    """

    entries: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        L = _as_square(self.entries)
        if np.any(np.triu(L, 1) != 0.0):
            raise ValueError("entries above the diagonal must be exactly zero")
        d = np.diag(L)
        if not np.all(np.isfinite(L)) or np.any(d <= 0.0):
            raise ValueError("diagonal must be finite and strictly positive")
        object.__setattr__(self, "entries", L)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def matrix(self) -> np.ndarray:
        """Return L @ L.T."""
        return self.entries @ self.entries.T


@dataclass(frozen=True)
class PsdMatrix:
    """A dense symmetric matrix that admits a (possibly jittered) Cholesky."""

    entries: np.ndarray
    factor: LowerTriangular = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = check_symmetric(self.entries)
        object.__setattr__(self, "entries", A)
        object.__setattr__(self, "factor", cholesky_psd(A))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def jitter_ladder(A: np.ndarray):
    """Yield the jitter values to try, starting with zero."""
    base = float(np.mean(np.diag(A)))
    if not base > 0.0:
        base = 1.0
    yield 0.0
    eps = JITTER_START
    while eps <= JITTER_MAX * (1 + 1e-12):
        yield eps * base
        eps *= JITTER_FACTOR


def cholesky_psd(A) -> LowerTriangular:
    """Cholesky factor of ``A + eps*I`` for the smallest ladder ``eps`` that works.

    Raises NotPositiveDefinite once the top of the ladder (1e-2 * mean diag)
    still fails.
    """
    if isinstance(A, PsdMatrix):
        return A.factor
    A = check_symmetric(A)
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    eye = np.eye(A.shape[0])
    for eps in jitter_ladder(A):
        try:
            L = np.linalg.cholesky(A + eps * eye if eps else A)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.diag(L) > 0.0):
            return LowerTriangular(L, jitter=eps)
    raise NotPositiveDefinite(
        f"Cholesky failed with jitter up to {JITTER_MAX:g} x mean diagonal"
    )


def solve_lower(L, B) -> np.ndarray:
    """Solve ``L X = B`` by forward substitution."""
    Lm = L.entries if isinstance(L, LowerTriangular) else np.asarray(L, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != Lm.shape[0]:
        raise DimensionMismatch(f"factor is {Lm.shape}, right-hand side is {B.shape}")
    return solve_triangular(Lm, B, lower=True, check_finite=False)


def solve_upper_t(L, B) -> np.ndarray:
    """Solve ``L.T X = B``."""
    Lm = L.entries if isinstance(L, LowerTriangular) else np.asarray(L, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != Lm.shape[0]:
        raise DimensionMismatch(f"factor is {Lm.shape}, right-hand side is {B.shape}")
    return solve_triangular(Lm, B, lower=True, trans="T", check_finite=False)


def chol_solve(L, B) -> np.ndarray:
    """Solve ``(L L.T) X = B``."""
    return solve_upper_t(L, solve_lower(L, B))


def chol_inverse(L) -> np.ndarray:
    n = L.dim if isinstance(L, LowerTriangular) else np.asarray(L).shape[0]
    inv = chol_solve(L, np.eye(n))
    return 0.5 * (inv + inv.T)


def logdet_from_chol(L) -> float:
    """log det(L L.T) = 2 * sum(log diag L)."""
    Lm = L.entries if isinstance(L, LowerTriangular) else np.asarray(L, dtype=float)
    return 2.0 * float(np.sum(np.log(np.diag(Lm))))
