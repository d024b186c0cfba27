"""
Gaussian-likelihood ground truth for checking the sparse model.

``exact_lml`` is the full O(N^3) GP evidence; ``titsias_bound`` is the
collapsed inducing-point bound computed in O(N M^2) without forming any
N x N matrix; ``optimal_q_gaussian`` is the q(u) at which the uncollapsed
bound reaches the collapsed one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .likelihoods import LOG_2PI
from .numerics import chol_solve, cholesky_psd, logdet_from_chol, solve_lower
from .svgp import VariationalGaussian


@dataclass(frozen=True)
class RegressionInstance:
    X: np.ndarray
    y: np.ndarray
    kernel: K.KernelSpec
    noise_variance: float = 0.1

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] < 1 or X.shape[0] != y.shape[0]:
            raise ValueError("need N >= 1 rows with one target each")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)


def exact_lml(inst: RegressionInstance) -> float:
    """log N(y | 0, K + noise * I)."""
    n = inst.X.shape[0]
    Ky = K.gram(inst.kernel, inst.X) + inst.noise_variance * np.eye(n)
    L = cholesky_psd(Ky)
    a = solve_lower(L, inst.y)
    return -0.5 * a @ a - 0.5 * logdet_from_chol(L) - 0.5 * n * LOG_2PI


def _collapsed_parts(inst, Z):
    s2 = inst.noise_variance
    Lk = cholesky_psd(K.gram(inst.kernel, Z))
    Kmn = K.cross_cov(inst.kernel, inst.X, Z).T
    V = solve_lower(Lk, Kmn) / np.sqrt(s2)  # M x N
    B = np.eye(Lk.dim) + V @ V.T
    LB = cholesky_psd(B)
    return s2, Lk, Kmn, V, LB


def titsias_bound(inst: RegressionInstance, Z, return_trace: bool = False):
    """log N(y | 0, Q_nn + s2 I) - tr(K_nn - Q_nn) / (2 s2)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n = inst.X.shape[0]
    s2, Lk, Kmn, V, LB = _collapsed_parts(inst, Z)
    c = solve_lower(LB, V @ inst.y) / np.sqrt(s2)
    # (Q + s2 I)^{-1} via Woodbury, logdet via the determinant lemma
    quad = (inst.y @ inst.y) / s2 - c @ c
    logdet = n * np.log(s2) + logdet_from_chol(LB)
    trace = float(np.sum(K.diag(inst.kernel, inst.X)) - s2 * np.sum(V * V))
    bound = -0.5 * (quad + logdet + n * LOG_2PI) - 0.5 * trace / s2
    return (bound, trace) if return_trace else bound


def optimal_q_gaussian(inst: RegressionInstance, Z) -> VariationalGaussian:
    """S* = K_mm (K_mm + K_mn K_nm / s2)^-1 K_mm,  m* = S* K_mm^-1 K_mn y / s2."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    s2 = inst.noise_variance
    Kmm = K.gram(inst.kernel, Z)
    Kmn = K.cross_cov(inst.kernel, inst.X, Z).T
    Lk = cholesky_psd(Kmm)
    Kmm = Lk.matrix()  # includes any jitter the factorization needed
    Sigma_inv = Kmm + Kmn @ Kmn.T / s2
    Ls = cholesky_psd(0.5 * (Sigma_inv + Sigma_inv.T))
    W = solve_lower(Ls, Kmm)  # S* = W^T W
    S = W.T @ W
    m = Kmm @ chol_solve(Ls, Kmn @ inst.y) / s2
    return VariationalGaussian(m, cholesky_psd(0.5 * (S + S.T)).entries)
