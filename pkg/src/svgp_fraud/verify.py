"""
Self-contained equivalence checks between the sparse model and the exact
Gaussian-likelihood oracle, run by ``svgp-fraud verify``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from . import oracle, svgp
from .likelihoods import BernoulliProbit, GaussianLik


@dataclass
class CheckResult:
    name: str
    gap: float
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<32s} gap={self.gap:.3e}  tol={self.tol:.0e}"


def random_regression(rng, n=None, d=None, noise=0.1):
    n = n or int(rng.integers(5, 41))
    d = d or int(rng.integers(2, 6))
    X = rng.standard_normal((n, d))
    kern = K.rbf(float(np.exp(rng.uniform(-0.3, 0.7))), float(np.exp(rng.uniform(-0.5, 0.5))))
    y = rng.standard_normal(n)
    return oracle.RegressionInstance(X, y, kern, noise)


def random_q(rng, M, scale=0.5):
    L = np.tril(rng.standard_normal((M, M)) * scale, -1)
    L[np.diag_indices(M)] = np.exp(rng.uniform(-1.0, 0.5, M))
    return svgp.VariationalGaussian(rng.standard_normal(M), L)


def gaussian_model(inst, Z, q):
    return svgp.SvgpModel(inst.kernel, svgp.InducingInputs(Z), q, GaussianLik(float(np.log(inst.noise_variance))))


def fd_gradient_error(model, X, y, scale=1.0, h=1e-5):
    """Worst violation of |g - fd| <= max(1e-4 |fd|, 1e-7 if |fd| < 1e-3), as a ratio to its allowance."""
    theta = svgp.pack(model)
    g = svgp.elbo_gradients(model, X, y, scale).flat()

    def f(t):
        return svgp.elbo(svgp.unpack(model, t), X, y, scale)

    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    if model.freeze_inducing:
        fd[svgp.param_blocks(model)["Z"]] = 0.0
    allow = np.where(np.abs(fd) < 1e-3, np.maximum(1e-7, 1e-4 * np.abs(fd)), 1e-4 * np.abs(fd))
    return float(np.max(np.abs(g - fd) / allow)), g, fd


def fd_instance(seed: int, likelihood: str, N=20, M=5, D=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, D))
    Z = rng.standard_normal((M, D))
    kern = K.sum_of(K.rbf(1.2, 1.3), K.matern32(0.8, 0.7)) if seed % 2 else K.rbf(1.1, 0.9)
    if likelihood == "gaussian":
        lik, y = GaussianLik(float(np.log(0.3))), rng.standard_normal(N)
    else:
        lik, y = BernoulliProbit(), rng.integers(0, 2, N)
    model = svgp.SvgpModel(kern, svgp.InducingInputs(Z), random_q(rng, M, 0.3), lik)
    return model, X, y


def run_checks(seed: int = 0, n_instances: int = 10) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(n_instances):
        inst = random_regression(rng)
        worst = max(worst, abs(oracle.titsias_bound(inst, inst.X) - oracle.exact_lml(inst)))
    results.append(CheckResult("titsias_eq_exact_at_Z_eq_X", worst, 1e-8, worst <= 1e-8))

    # ordering: elbo(random q) <= elbo(q*) = titsias <= exact
    worst_order = -np.inf
    worst_opt = 0.0
    for _ in range(n_instances):
        inst = random_regression(rng)
        n = inst.X.shape[0]
        M = int(rng.integers(1, min(n, 8) + 1))
        Z = inst.X[rng.choice(n, M, replace=False)]
        tb = oracle.titsias_bound(inst, Z)
        ex = oracle.exact_lml(inst)
        q_star = oracle.optimal_q_gaussian(inst, Z)
        e_star = svgp.elbo(gaussian_model(inst, Z, q_star), inst.X, inst.y)
        e_rand = svgp.elbo(gaussian_model(inst, Z, random_q(rng, M)), inst.X, inst.y)
        worst_order = max(worst_order, e_rand - tb, e_star - tb, tb - ex)
        worst_opt = max(worst_opt, abs(e_star - tb))
    results.append(CheckResult("bound_ordering", float(worst_order), 1e-8, worst_order <= 1e-8))
    results.append(CheckResult("elbo_at_optimal_q_eq_titsias", worst_opt, 1e-6, worst_opt <= 1e-6))

    for lik in ("gaussian", "bernoulli"):
        worst = 0.0
        for s in range(3):
            model, X, y = fd_instance(seed * 100 + s, lik)
            worst = max(worst, fd_gradient_error(model, X, y)[0])
        results.append(CheckResult(f"elbo_gradients_fd_{lik}", worst, 1.0, worst <= 1.0))

    kl_gap = 0.0
    for _ in range(3):
        Z = rng.standard_normal((5, 3))
        model = svgp.init_model(K.rbf(1.0, 2.0), Z)
        kl_gap = max(kl_gap, abs(svgp.kl_qu_pu(model)))
    results.append(CheckResult("kl_zero_at_prior", kl_gap, 1e-10, kl_gap <= 1e-10))
    return results
