import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from svgp_fraud.errors import NegativeVariance
from svgp_fraud.likelihoods import (
    BernoulliProbit,
    GaussianLik,
    predictive_prob,
    probit,
    variational_expectation_bernoulli,
    variational_expectation_gaussian,
)


def phi_oracle(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def test_probit_values():
    assert probit(0.0) == 0.5
    assert abs(probit(40.0) - 1.0) <= 1e-15
    np.testing.assert_allclose(probit(1.0), phi_oracle(1.0), rtol=1e-14)
    np.testing.assert_allclose(probit(1.0), 0.841345, atol=1e-6)


@given(st.floats(-36, 36))
def test_probit_symmetry(x):
    assert abs(probit(-x) - (1.0 - probit(x))) <= 1e-15


def test_probit_tails_keep_logs_finite():
    assert np.isfinite(np.log(probit(-60.0)))
    assert np.isfinite(np.log1p(-probit(60.0)))


def test_bernoulli_degenerate_variance():
    lik = BernoulliProbit()
    assert variational_expectation_bernoulli(lik, 1, 0.0, 0.0) == pytest.approx(np.log(0.5), abs=1e-15)
    for mu in (-3.0, -0.4, 1.7):
        np.testing.assert_allclose(
            variational_expectation_bernoulli(lik, 1, mu, 0.0), np.log(phi_oracle(mu)), rtol=1e-13
        )
        np.testing.assert_allclose(
            variational_expectation_bernoulli(lik, 0, mu, 0.0), np.log(1 - phi_oracle(mu)), rtol=1e-13
        )


def test_bernoulli_label_symmetry_at_zero_mean():
    lik = BernoulliProbit()
    assert variational_expectation_bernoulli(lik, 1, 0.0, 1.0) == pytest.approx(
        variational_expectation_bernoulli(lik, 0, 0.0, 1.0), abs=1e-15
    )


def test_bernoulli_matches_monte_carlo():
    rng = np.random.default_rng(7)
    f = 0.7 + np.sqrt(2.3) * rng.standard_normal(1_000_000)
    samples = np.log(probit(f))
    est, se = samples.mean(), samples.std(ddof=1) / np.sqrt(samples.size)
    val = variational_expectation_bernoulli(BernoulliProbit(), 1, 0.7, 2.3)
    assert abs(val - est) <= 3 * se


def test_bernoulli_rejects_negative_variance():
    with pytest.raises(NegativeVariance):
        variational_expectation_bernoulli(BernoulliProbit(), 1, 0.0, -1e-3)
    with pytest.raises(ValueError):
        BernoulliProbit(quadrature_order=1)


def test_bernoulli_is_nonpositive():
    lik = BernoulliProbit()
    mu, var = np.meshgrid(np.linspace(-8, 8, 17), np.linspace(0, 10, 11))
    for y in (0, 1):
        assert np.all(lik.variational_expectations(np.full(mu.shape, y), mu, var) <= 0)


def test_bernoulli_monotone_in_mean():
    lik = BernoulliProbit()
    mu = np.linspace(-6, 6, 121)
    for var in (0.0, 0.5, 2.0, 8.0):
        vals = lik.variational_expectations(np.ones_like(mu), mu, np.full_like(mu, var))
        assert np.all(np.diff(vals) > 0)


def test_quadrature_accurate_in_training_regime():
    # prior variance s_f^2 = 2 is the top of the regime the classifier works in
    lo, hi = BernoulliProbit(20), BernoulliProbit(160)
    mu, var = np.meshgrid(np.linspace(-5, 5, 11), np.linspace(0, 1.5, 7))
    for y in (0, 1):
        yy = np.full(mu.shape, y)
        assert np.max(np.abs(lo.variational_expectations(yy, mu, var) - hi.variational_expectations(yy, mu, var))) <= 1e-8


def test_bernoulli_gradients_match_finite_differences():
    lik = BernoulliProbit()
    mu, var = np.meshgrid(np.linspace(-4, 4, 9), np.linspace(0.1, 5, 6))
    mu, var = mu.ravel(), var.ravel()
    for y in (0, 1):
        yy = np.full(mu.shape, y)
        _, dmu, dvar = lik.variational_expectations(yy, mu, var, grads=True)
        h = 1e-6
        fd_mu = (lik.variational_expectations(yy, mu + h, var) - lik.variational_expectations(yy, mu - h, var)) / (2 * h)
        fd_var = (lik.variational_expectations(yy, mu, var + h) - lik.variational_expectations(yy, mu, var - h)) / (2 * h)
        np.testing.assert_allclose(dmu, fd_mu, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(dvar, fd_var, rtol=1e-6, atol=1e-8)


def test_bernoulli_var_gradient_at_zero_variance():
    lik = BernoulliProbit()
    _, _, dvar = lik.variational_expectations(1, 0.3, 0.0, grads=True)
    h = 1e-6
    fd = (lik.variational_expectations(1, 0.3, h) - lik.variational_expectations(1, 0.3, 0.0)) / h
    assert np.isfinite(dvar)
    np.testing.assert_allclose(dvar, fd, rtol=1e-4)


def test_predictive_prob_examples():
    assert predictive_prob(0.0, 3.7) == 0.5
    np.testing.assert_allclose(predictive_prob(1.0, 0.0), phi_oracle(1.0), rtol=1e-14)
    np.testing.assert_allclose(predictive_prob(1.0, 3.0), phi_oracle(0.5), rtol=1e-14)
    np.testing.assert_allclose(predictive_prob(1.0, 3.0), 0.691462, atol=1e-6)
    with pytest.raises(NegativeVariance):
        predictive_prob(0.0, -1.0)


def test_predictive_prob_matches_monte_carlo():
    rng = np.random.default_rng(11)
    samples = probit(1.0 + np.sqrt(3.0) * rng.standard_normal(1_000_000))
    est, se = samples.mean(), samples.std(ddof=1) / 1000.0
    assert abs(predictive_prob(1.0, 3.0) - est) <= 3 * se


@given(st.floats(-20, 20), st.floats(0, 100))
def test_predictive_prob_range(mu, var):
    p = predictive_prob(mu, var)
    assert 0.0 <= p <= 1.0
    assert (p == 0.5) == (mu == 0.0) or abs(mu) / np.sqrt(1 + var) < 1e-15


def test_predictive_prob_shrinks_with_variance():
    ps = predictive_prob(1.0, np.array([0.0, 1.0, 4.0, 16.0, 256.0]))
    assert np.all(np.diff(ps) < 0) and np.all(ps > 0.5)


def test_gaussian_closed_form_examples():
    lik = GaussianLik(float(np.log(1.0 / (2.0 * np.pi))))
    assert variational_expectation_gaussian(lik, 0.4, 0.4, 0.0) == pytest.approx(0.0, abs=1e-14)
    lik = GaussianLik(float(np.log(0.3)))
    expected = -0.5 * np.log(2 * np.pi * 0.3) - 0.5 * (1.2 - 0.2) ** 2 / 0.3
    np.testing.assert_allclose(variational_expectation_gaussian(lik, 1.2, 0.2, 0.0), expected, rtol=1e-14)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 4), st.floats(0.05, 3))
def test_gaussian_closed_form_matches_quadrature(y, mu, var, s2):
    lik = GaussianLik(float(np.log(s2)))
    sd = np.sqrt(var)

    def integrand(f):
        logp = -0.5 * np.log(2 * np.pi * s2) - 0.5 * (y - f) ** 2 / s2
        return logp * np.exp(-0.5 * (f - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)

    num = integrate.quad(integrand, mu - 30 * sd, mu + 30 * sd, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert abs(variational_expectation_gaussian(lik, y, mu, var) - num) <= 1e-10 * max(1.0, abs(num))


def test_gaussian_noise_gradient():
    lik = GaussianLik(float(np.log(0.4)))
    h = 1e-6
    up = GaussianLik(lik.log_noise_variance + h).variational_expectations(0.3, -0.2, 0.5)
    dn = GaussianLik(lik.log_noise_variance - h).variational_expectations(0.3, -0.2, 0.5)
    np.testing.assert_allclose(lik.d_log_noise(0.3, -0.2, 0.5), (up - dn) / (2 * h), rtol=1e-7)
