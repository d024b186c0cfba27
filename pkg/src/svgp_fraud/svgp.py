"""
Sparse variational GP with inducing points (uncollapsed bound).

The variational posterior over inducing values is q(u) = N(m, S) with S held
through its Cholesky factor ``L_S``. Marginals of q(f) at a batch of inputs
are

    mu_i  = a_i^T m
    var_i = k(x_i, x_i) + a_i^T (S - K_mm) a_i,      a_i^T = k_i^T K_mm^{-1}

and the objective is ``scale * sum_i E_q[log p(y_i|f_i)] - KL[q(u) || p(u)]``
with p(u) = N(0, K_mm). No whitening: m and S live directly in u-space.

Gradients are derived by hand. The trainable state is flattened in the order
(m, free entries of L_S with log-diagonal, Z, kernel log-params,
likelihood log-params); see :func:`pack` / :func:`unpack`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels as K
from .errors import DimensionMismatch
from .likelihoods import BernoulliProbit, GaussianLik
from .numerics import (
    LowerTriangular,
    chol_inverse,
    chol_solve,
    cholesky_psd,
    logdet_from_chol,
    solve_lower,
)

VAR_FLOOR = 1e-12
CHUNK = 4096


@dataclass(frozen=True)
class InducingInputs:
    Z: np.ndarray

    def __post_init__(self):
        Z = np.array(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] < 1:
            raise DimensionMismatch(f"Z must be M x D with M >= 1, got {Z.shape}")
        if len(np.unique(Z, axis=0)) != Z.shape[0]:
            raise ValueError("inducing inputs contain duplicate rows")
        object.__setattr__(self, "Z", Z)

    @property
    def M(self) -> int:
        return self.Z.shape[0]

    @property
    def D(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class VariationalGaussian:
    m: np.ndarray
    L_S: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).ravel()
        L = LowerTriangular(np.array(self.L_S, dtype=float)).entries
        if L.shape[0] != m.shape[0]:
            raise DimensionMismatch(f"mean has length {m.shape[0]}, factor is {L.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "L_S", L)

    @property
    def S(self) -> np.ndarray:
        return self.L_S @ self.L_S.T


@dataclass(frozen=True)
class SvgpModel:
    kernel: K.KernelSpec
    inducing: InducingInputs
    q: VariationalGaussian
    likelihood: BernoulliProbit | GaussianLik
    freeze_inducing: bool = False

    def __post_init__(self):
        if self.q.m.shape[0] != self.inducing.M:
            raise DimensionMismatch("q dimension must equal the number of inducing points")
        if isinstance(self.likelihood, BernoulliProbit) and self.kernel.is_white_only():
            raise ValueError("a White kernel alone cannot drive a classifier")

    @property
    def Z(self) -> np.ndarray:
        return self.inducing.Z

    @property
    def M(self) -> int:
        return self.inducing.M


@dataclass
class MarginalMoments:
    mu: np.ndarray
    var: np.ndarray
    n_clamped: int = 0


def init_model(kernel, Z, likelihood=None, freeze_inducing: bool = False) -> SvgpModel:
    """Model with q(u) set to the prior: m = 0, S = K_mm, so KL starts at 0."""
    inducing = Z if isinstance(Z, InducingInputs) else InducingInputs(Z)
    Lk = cholesky_psd(K.gram(kernel, inducing.Z))
    q = VariationalGaussian(np.zeros(inducing.M), Lk.entries)
    return SvgpModel(kernel, inducing, q, likelihood or BernoulliProbit(), freeze_inducing)


def _check_x(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.inducing.D:
        raise DimensionMismatch(f"expected N x {model.inducing.D} inputs, got {X.shape}")
    return X


def _kmm_factor(model):
    return cholesky_psd(K.gram(model.kernel, model.Z))


def _marginals(model, X, Lk):
    Knm = K.cross_cov(model.kernel, X, model.Z)
    At = chol_solve(Lk, Knm.T)  # M x N, columns are a_i
    mu = At.T @ model.q.m
    LtA = model.q.L_S.T @ At
    var = K.diag(model.kernel, X) + np.sum(LtA**2, axis=0) - np.sum(At * Knm.T, axis=0)
    return Knm, At, mu, var


def q_marginals(model: SvgpModel, X) -> MarginalMoments:
    """Per-point mean and variance of q(f); never forms the N x N covariance."""
    X = _check_x(model, X)
    Lk = _kmm_factor(model)
    mus, vs = [], []
    for start in range(0, max(X.shape[0], 1), CHUNK):
        _, _, mu, var = _marginals(model, X[start : start + CHUNK], Lk)
        mus.append(mu)
        vs.append(var)
    mu, var = np.concatenate(mus), np.concatenate(vs)
    low = var < VAR_FLOOR
    return MarginalMoments(mu, np.where(low, VAR_FLOOR, var), int(np.sum(low)))


def kl_qu_pu(model: SvgpModel) -> float:
    """KL[N(m, S) || N(0, K_mm)]."""
    Lk = _kmm_factor(model)
    return _kl(model, Lk)


def _kl(model, Lk):
    m, L = model.q.m, model.q.L_S
    trace = np.sum(solve_lower(Lk, L) ** 2)
    maha = np.sum(solve_lower(Lk, m) ** 2)
    return 0.5 * (trace + maha - model.M + logdet_from_chol(Lk) - logdet_from_chol(L))


def data_term(model: SvgpModel, X, y) -> float:
    """Sum of expected log-likelihoods under q(f), without any scaling."""
    X = _check_x(model, X)
    y = np.asarray(y)
    Lk = _kmm_factor(model)
    total = 0.0
    for start in range(0, X.shape[0], CHUNK):
        sl = slice(start, start + CHUNK)
        _, _, mu, var = _marginals(model, X[sl], Lk)
        var = np.maximum(var, VAR_FLOOR)
        total += float(np.sum(model.likelihood.variational_expectations(y[sl], mu, var)))
    return total


def elbo(model: SvgpModel, X, y, scale: float = 1.0) -> float:
    """scale * sum_i E_q[log p(y_i | f_i)] - KL[q(u) || p(u)]."""
    return scale * data_term(model, X, y) - kl_qu_pu(model)


@dataclass
class ElboGradients:
    value: float
    kl: float
    m: np.ndarray
    L_S: np.ndarray  # lower triangle; diagonal already w.r.t. log L_ii
    Z: np.ndarray
    kernel: np.ndarray
    likelihood: np.ndarray
    n_clamped: int = 0

    def flat(self) -> np.ndarray:
        rows, cols = np.tril_indices(self.m.shape[0])
        return np.concatenate(
            [self.m, self.L_S[rows, cols], self.Z.ravel(), self.kernel, self.likelihood]
        )


def elbo_gradients(model: SvgpModel, X, y, scale: float = 1.0) -> ElboGradients:
    X = _check_x(model, X)
    y = np.asarray(y)
    kern, Z, lik = model.kernel, model.Z, model.likelihood
    m, L = model.q.m, model.q.L_S
    M = model.M

    Kmm = K.gram(kern, Z)
    Lk = cholesky_psd(Kmm)
    Kinv = chol_inverse(Lk)
    S = L @ L.T

    Knm, At, mu, var = _marginals(model, X, Lk)
    A = At.T
    low = var < VAR_FLOOR
    var = np.where(low, VAR_FLOOR, var)

    vals, gmu, gvar = lik.variational_expectations(y, mu, var, grads=True)
    gvar = np.where(low, 0.0, gvar)
    gmu, gvar = scale * gmu, scale * gvar
    kl = _kl(model, Lk)
    value = scale * float(np.sum(vals)) - kl

    alpha = Kinv @ m
    beta = A.T @ gmu
    P = A.T @ (gvar[:, None] * A)

    dm = beta - alpha

    # d/dL of [tr(P S)] - KL, KL part: (K^-1 - S^-1) L = K^-1 L - L^-T
    LinvT = solve_lower(L, np.eye(M)).T
    dL = np.tril(2.0 * P @ L - (Kinv @ L - LinvT))
    dL[np.diag_indices(M)] *= np.diag(L)

    # adjoints of the kernel matrices
    KinvS = Kinv @ S
    B = KinvS @ Kinv - Kinv
    G_knm = np.outer(gmu, alpha) + 2.0 * (gvar[:, None] * Knm) @ B
    G_kdiag = gvar
    G_kmm = -np.outer(beta, alpha) - 2.0 * KinvS @ P + P
    G_kmm -= 0.5 * (Kinv - KinvS @ Kinv - np.outer(alpha, alpha))

    dtheta = np.array(
        [
            np.sum(G_knm * dKnm) + np.sum(G_kmm * dKmm) + G_kdiag @ dkd
            for dKnm, dKmm, dkd in zip(
                K.kernel_grads(kern, X, Z), K.kernel_grads(kern, Z), K.diag_grads(kern, X)
            )
        ]
    )

    if model.freeze_inducing:
        dZ = np.zeros_like(Z)
    else:
        dZ = K.cross_cov_grad_z(kern, G_knm, X, Z) + K.gram_grad_z(kern, G_kmm, Z)

    if isinstance(lik, GaussianLik):
        dlik = np.array([scale * np.sum(lik.d_log_noise(y, mu, var))])
    else:
        dlik = np.zeros(0)

    return ElboGradients(value, kl, dm, dL, dZ, dtheta, dlik, int(np.sum(low)))


def predict(model: SvgpModel, X_star):
    """Return (probability, latent mean, latent variance) per point.

    For a Gaussian likelihood the first entry is replaced by the predictive
    variance of y, i.e. (mean, var + noise, latent var).
    """
    mm = q_marginals(model, X_star)
    if isinstance(model.likelihood, GaussianLik):
        mean, pvar = model.likelihood.predict(mm.mu, mm.var)
        return mean, pvar, mm.var
    return model.likelihood.predict(mm.mu, mm.var), mm.mu, mm.var


# ---------------------------------------------------------------------------
# flat parameter vector
# ---------------------------------------------------------------------------


def param_blocks(model: SvgpModel) -> dict[str, slice]:
    M, D = model.M, model.inducing.D
    sizes = [
        ("m", M),
        ("L_S", M * (M + 1) // 2),
        ("Z", M * D),
        ("kernel", model.kernel.n_params),
        ("likelihood", model.likelihood.n_params),
    ]
    out, i = {}, 0
    for name, n in sizes:
        out[name] = slice(i, i + n)
        i += n
    return out


def pack(model: SvgpModel) -> np.ndarray:
    M = model.M
    rows, cols = np.tril_indices(M)
    L = model.q.L_S.copy()
    L[np.diag_indices(M)] = np.log(np.diag(L))
    return np.concatenate(
        [
            model.q.m,
            L[rows, cols],
            model.Z.ravel(),
            model.kernel.get_params(),
            model.likelihood.get_params(),
        ]
    )


def unpack(model: SvgpModel, theta) -> SvgpModel:
    theta = np.asarray(theta, dtype=float)
    b = param_blocks(model)
    M, D = model.M, model.inducing.D
    L = np.zeros((M, M))
    L[np.tril_indices(M)] = theta[b["L_S"]]
    L[np.diag_indices(M)] = np.exp(np.diag(L))
    q = VariationalGaussian(theta[b["m"]].copy(), L)
    Z = theta[b["Z"]].reshape(M, D)
    inducing = model.inducing if np.array_equal(Z, model.Z) else InducingInputs(Z)
    return replace(
        model,
        q=q,
        inducing=inducing,
        kernel=model.kernel.with_params(theta[b["kernel"]]),
        likelihood=model.likelihood.with_params(theta[b["likelihood"]]),
    )
