"""
Observation models: probit-Bernoulli for classification and Gaussian for the
regression oracle.

Both expose ``variational_expectations(y, mu, var)`` returning the
per-point expected log-likelihood under N(f | mu, var) together with its
derivatives in mu and var, which is all the sparse model needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfc, log_ndtr

from .errors import DimensionMismatch, NegativeVariance

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny
LOG_2PI = np.log(2.0 * np.pi)


def probit(x):
    """Standard normal CDF, clamped to [tiny, 1 - eps] in the far tails."""
    x = np.asarray(x, dtype=float)
    p = 0.5 * erfc(-x / np.sqrt(2.0))
    p = np.where(x > 37.0, 1.0 - _EPS, np.where(x < -37.0, _TINY, p))
    p = np.clip(p, _TINY, 1.0 - _EPS)
    return p if p.ndim else float(p)


def _check_var(var):
    var = np.asarray(var, dtype=float)
    if np.any(var < 0.0):
        raise NegativeVariance("variance must be non-negative")
    return var


def predictive_prob(mu_star, var_star):
    """p(y*=1) = probit(mu / sqrt(1 + var)), the probit-Gaussian convolution."""
    var_star = _check_var(var_star)
    return probit(np.asarray(mu_star, dtype=float) / np.sqrt(1.0 + var_star))


def _signed(y):
    y = np.asarray(y)
    if np.any((y != 0) & (y != 1)):
        raise ValueError("Bernoulli labels must be 0 or 1")
    return 2.0 * y - 1.0


def _inv_mills(z):
    """phi(z) / Phi(z), evaluated in log space so it stays finite for z << 0."""
    return np.exp(-0.5 * z**2 - 0.5 * LOG_2PI - log_ndtr(z))


@dataclass(frozen=True)
class BernoulliProbit:
    quadrature_order: int = 20
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.quadrature_order < 2:
            raise ValueError("quadrature_order must be at least 2")
        t, w = np.polynomial.hermite.hermgauss(self.quadrature_order)
        # rescaled so that E[g(f)] ~= sum w * g(mu + sqrt(var) * t), f ~ N(mu, var)
        object.__setattr__(self, "_nodes", t * np.sqrt(2.0))
        object.__setattr__(self, "_weights", w / np.sqrt(np.pi))

    n_params = 0

    def get_params(self) -> np.ndarray:
        return np.zeros(0)

    def with_params(self, theta) -> "BernoulliProbit":
        if np.size(theta):
            raise DimensionMismatch("BernoulliProbit has no parameters")
        return self

    def param_names(self) -> list[str]:
        return []

    def to_dict(self) -> dict:
        return {"kind": "bernoulli_probit", "quadrature_order": self.quadrature_order}

    def log_density(self, y, f):
        return log_ndtr(_signed(y) * np.asarray(f, dtype=float))

    def variational_expectations(self, y, mu, var, grads: bool = False):
        """E_{N(f|mu,var)}[log Phi(y' f)] by Gauss-Hermite quadrature.

        With ``grads`` also returns d/dmu and d/dvar of the quadrature sum
        itself, so the gradient is consistent with the value it came from.
        """
        ys = _signed(y)
        mu = np.asarray(mu, dtype=float)
        var = _check_var(var)
        mu, var, ys = np.broadcast_arrays(mu, var, ys)
        f = mu[..., None] + np.sqrt(var)[..., None] * self._nodes
        z = ys[..., None] * f
        logp = log_ndtr(z)
        val = logp @ self._weights
        # degenerate Gaussians get the exact point value
        point = var == 0.0
        if np.any(point):
            val = np.where(point, log_ndtr(ys * mu), val)
        if not grads:
            return val
        lam = _inv_mills(z)
        dlogp = ys[..., None] * lam
        dmu = dlogp @ self._weights
        # exact derivative of the quadrature sum; its var -> 0 limit is E[d2 log p]/2
        tiny = var < 1e-10
        sd = np.sqrt(np.where(tiny, 1.0, var))
        dvar = (dlogp * self._nodes) @ self._weights / (2.0 * sd)
        if np.any(tiny):
            dvar = np.where(tiny, 0.5 * (-lam * (z + lam)) @ self._weights, dvar)
        return val, dmu, dvar

    def predict(self, mu, var):
        return predictive_prob(mu, var)


@dataclass(frozen=True)
class GaussianLik:
    log_noise_variance: float = 0.0

    @property
    def noise_variance(self) -> float:
        return float(np.exp(self.log_noise_variance))

    n_params = 1

    def get_params(self) -> np.ndarray:
        return np.array([self.log_noise_variance])

    def with_params(self, theta) -> "GaussianLik":
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape != (1,):
            raise DimensionMismatch("GaussianLik has exactly one parameter")
        return replace(self, log_noise_variance=float(theta[0]))

    def param_names(self) -> list[str]:
        return ["gaussian.log_noise_variance"]

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "noise_variance": self.noise_variance}

    def log_density(self, y, f):
        s2 = self.noise_variance
        return -0.5 * (LOG_2PI + np.log(s2)) - 0.5 * (np.asarray(y) - f) ** 2 / s2

    def variational_expectations(self, y, mu, var, grads: bool = False):
        s2 = self.noise_variance
        var = _check_var(var)
        r = np.asarray(y, dtype=float) - np.asarray(mu, dtype=float)
        val = -0.5 * (LOG_2PI + np.log(s2)) - (r**2 + var) / (2.0 * s2)
        if not grads:
            return val
        dmu = r / s2
        dvar = np.full(np.shape(val), -0.5 / s2)
        return val, dmu, dvar

    def d_log_noise(self, y, mu, var):
        """d/d(log noise variance) of the per-point expectation."""
        s2 = self.noise_variance
        r = np.asarray(y, dtype=float) - np.asarray(mu, dtype=float)
        return -0.5 + (r**2 + np.asarray(var)) / (2.0 * s2)

    def predict(self, mu, var):
        return np.asarray(mu), np.asarray(var) + self.noise_variance


def likelihood_from_dict(d: dict):
    if d["kind"] == "bernoulli_probit":
        return BernoulliProbit(int(d.get("quadrature_order", 20)))
    if d["kind"] == "gaussian":
        return GaussianLik(float(np.log(d["noise_variance"])))
    raise ValueError(f"unknown likelihood {d['kind']!r}")


def variational_expectation_bernoulli(lik: BernoulliProbit, y, mu, var):
    return lik.variational_expectations(y, mu, var)


def variational_expectation_gaussian(lik: GaussianLik, y, mu, var):
    return lik.variational_expectations(y, mu, var)
