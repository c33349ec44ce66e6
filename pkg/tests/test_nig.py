import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from factorcvar.errors import (
    InvalidParameterError,
    NonPositiveArgumentError,
    RankDeficientDataError,
    SingularDispersionError,
)
from factorcvar.nig import (
    ClassicalNig,
    NigParams,
    bessel_k,
    classical_log_density,
    fit_nig_em,
    from_classical,
    gig_moments,
    log_bessel_k,
    nig_log_density,
    nig_loglik,
    params_from_record,
    params_to_record,
    sample_gig,
    sample_nig,
    to_classical,
)


def _params3():
    A = np.array([[1.0, 0.3, -0.2], [0.3, 0.8, 0.1], [-0.2, 0.1, 1.5]])
    return NigParams(1.5, np.array([0.1, -0.2, 0.0]), np.array([0.3, -0.1, 0.2]), A)


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_bessel_half_order(x):
    assert bessel_k(0.5, x) == pytest.approx(math.sqrt(math.pi / (2 * x)) * math.exp(-x), rel=1e-13)


def test_bessel_recurrence_and_log_space():
    for nu in (0.3, 1.0, 2.5, 7.0):
        for x in (0.2, 1.5, 30.0):
            lhs = bessel_k(nu + 1, x)
            rhs = bessel_k(nu - 1, x) + 2 * nu / x * bessel_k(nu, x)
            assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
    # far beyond underflow of the plain function
    assert log_bessel_k(2.0, 1000.0) == pytest.approx(0.5 * math.log(math.pi / 2000.0) - 1000.0, rel=1e-3)
    assert np.isfinite(log_bessel_k(0.5, 5000.0))
    with pytest.raises(NonPositiveArgumentError):
        bessel_k(1.0, 0.0)


def test_bessel_against_integral():
    val, _ = integrate.quad(lambda t: math.exp(-1.5 * math.cosh(t)) * math.cosh(2 * t), 0, 12.0,
                            epsabs=1e-15, epsrel=1e-13)
    assert bessel_k(2.0, 1.5) == pytest.approx(val, rel=1e-10)


def test_symmetric_density():
    p = NigParams(0.8, np.zeros(1), np.zeros(1), np.eye(1) * 0.5)
    for x in (0.5, 1.0, 2.0):
        assert abs(nig_log_density([x], p) - nig_log_density([-x], p)) < 1e-12


def _mixture_density(x, p):
    """Normal mean-variance mixture integrated over the inverse Gaussian mixing law."""
    s2 = float(p.sigma[0, 0])
    ig = stats.invgauss(mu=1.0 / p.alpha_bar, scale=p.alpha_bar)

    def integrand(z):
        return stats.norm.pdf(x, p.mu[0] + z * p.gamma[0], math.sqrt(z * s2)) * ig.pdf(z)

    return integrate.quad(integrand, 0, np.inf, epsabs=1e-14, epsrel=1e-11, limit=200)[0]


@pytest.mark.parametrize("ab,g", [(0.7, 0.4), (3.0, -0.5), (50.0, 0.0)])
def test_density_matches_mixture_integral(ab, g):
    p = NigParams(ab, np.array([0.2]), np.array([g]), np.array([[0.6]]))
    for x in (-2.0, -0.3, 0.5, 3.0):
        assert math.exp(nig_log_density([x], p)) == pytest.approx(_mixture_density(x, p), rel=1e-7)


def test_gaussian_limit():
    # excess kurtosis is 3/alpha_bar; the Edgeworth term bounds the gap on +-2 sd
    p = NigParams(50.0, np.zeros(1), np.zeros(1), np.eye(1))
    x = np.linspace(-2, 2, 81)
    rel = np.exp(nig_log_density(x[:, None], p)) / stats.norm.pdf(x) - 1
    edgeworth = (3 / 50) / 24 * (x**4 - 6 * x**2 + 3)
    assert np.max(np.abs(rel - edgeworth)) < 2e-3
    assert np.max(np.abs(rel)) < 0.015
    tight = NigParams(200.0, np.zeros(1), np.zeros(1), np.eye(1))
    rel = np.exp(nig_log_density(x[:, None], tight)) / stats.norm.pdf(x) - 1
    assert np.max(np.abs(rel)) < 0.01


def test_reparametrization_round_trip():
    p = _params3()
    back = from_classical(to_classical(p))
    assert back.alpha_bar == pytest.approx(p.alpha_bar, rel=1e-10)
    for a, b in ((back.mu, p.mu), (back.gamma, p.gamma), (back.sigma, p.sigma)):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
    assert np.linalg.det(to_classical(p).Delta) == pytest.approx(1.0, rel=1e-12)


def test_c_scaling_invariance():
    c = to_classical(_params3())
    d = c.mu.size
    x = np.random.default_rng(0).normal(size=(20, d))
    base = classical_log_density(x, c)
    for scale in (0.1, 3.0, 17.0):
        moved = ClassicalNig(scale ** (1 / (2 * d)) * c.alpha, c.beta, scale ** (-1 / (2 * d)) * c.delta,
                             c.mu, scale ** (1 / d) * c.Delta)
        np.testing.assert_allclose(classical_log_density(x, moved), base, rtol=0, atol=1e-10)


def test_gig_sampler():
    chi, psi = 2.0, 0.5
    z = sample_gig(chi, psi, 1_000_000, seed=3)
    om = math.sqrt(chi * psi)
    mean = math.sqrt(chi / psi) * special.kv(0.5, om) / special.kv(-0.5, om)
    assert np.all(z > 0)
    assert z.mean() == pytest.approx(mean, rel=0.01)
    np.testing.assert_array_equal(sample_gig(chi, psi, 100, seed=9), sample_gig(chi, psi, 100, seed=9))
    with pytest.raises(InvalidParameterError):
        sample_gig(-1.0, 1.0, 5)


def test_gig_moments_properties():
    m = gig_moments(-2.0, np.array([0.5, 3.0, 40.0]), 1.2)
    assert np.all(m.e_z > 0) and np.all(m.e_inv > 0)
    assert np.all(m.e_z * m.e_inv >= 1)
    # E[log Z] by direct integration of the GIG density
    lam, chi, psi = -2.0, 3.0, 1.2
    dens = lambda z: z ** (lam - 1) * math.exp(-0.5 * (chi / z + psi * z))  # noqa: E731
    norm = integrate.quad(dens, 0, np.inf)[0]
    elog = integrate.quad(lambda z: math.log(z) * dens(z), 0, np.inf)[0] / norm
    assert m.e_log[1] == pytest.approx(elog, rel=1e-6)


def test_symmetric_sampler_has_no_skew():
    p = NigParams(1.0, np.zeros(2), np.zeros(2), np.eye(2))
    x = sample_nig(p, 200_000, seed=1)
    se = math.sqrt(6 / 200_000) * 3
    assert np.all(np.abs(stats.skew(x, axis=0)) < 3 * se)


def test_sampler_matches_density_ks():
    p = NigParams(1.2, np.array([0.1]), np.array([0.3]), np.array([[0.8]]))
    grid = np.linspace(-30, 30, 600_001)
    cdf = integrate.cumulative_trapezoid(np.exp(nig_log_density(grid[:, None], p)), grid, initial=0.0)
    assert cdf[-1] == pytest.approx(1.0, abs=1e-6)
    draws = np.sort(sample_nig(p, 100_000, seed=5)[:, 0])
    F = np.interp(draws, grid, cdf)
    n = draws.size
    ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert ks < 0.01


def test_em_gaussian_data():
    rng = np.random.default_rng(2)
    C = np.array([[1.0, 0.4], [0.4, 2.0]])
    x = rng.multivariate_normal([0.5, -1.0], C, size=3000)
    p, trace = fit_nig_em(x)
    assert p.alpha_bar > 20
    gauss = stats.multivariate_normal(x.mean(0), np.cov(x.T, bias=True)).logpdf(x).sum()
    assert abs(nig_loglik(x, p) - gauss) <= 0.005 * abs(gauss)
    assert np.all(np.diff(trace.loglik) >= -1e-8 * np.abs(trace.loglik[1:]))


def test_em_recovers_heavy_tails():
    truth = NigParams(0.8, np.array([0.0, 0.1]), np.array([0.2, -0.1]), np.array([[1.0, 0.2], [0.2, 0.5]]))
    x = sample_nig(truth, 20000, seed=8)
    p, trace = fit_nig_em(x)
    assert trace.converged
    assert p.alpha_bar == pytest.approx(0.8, rel=0.15)


def test_em_input_checks():
    with pytest.raises(RankDeficientDataError):
        fit_nig_em(np.ones((3, 2)))
    x = np.random.default_rng(0).normal(size=(50, 2))
    with pytest.raises(RankDeficientDataError):
        fit_nig_em(np.column_stack([x, x[:, 0] + x[:, 1]]))


def test_params_validation_and_record():
    with pytest.raises(InvalidParameterError):
        NigParams(-1.0, np.zeros(1), np.zeros(1), np.eye(1))
    with pytest.raises((SingularDispersionError, InvalidParameterError)):
        NigParams(1.0, np.zeros(2), np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]])).cholesky()
    p = _params3()
    back = params_from_record(params_to_record(p))
    assert back.alpha_bar == p.alpha_bar
    np.testing.assert_array_equal(back.sigma, p.sigma)
    np.testing.assert_array_equal(back.gamma, p.gamma)
