"""Multivariate normal inverse Gaussian distribution.

Parametrized by ``(alpha_bar, mu, gamma, sigma)`` with the mixing variable
normalized to ``E[Z] = 1``::

    X = mu + Z * gamma + sqrt(Z) * L @ W,   sigma = L L',  W ~ N(0, I)

For the NIG member (GIG index -1/2) the mixing law is inverse Gaussian with
``chi = psi = alpha_bar``, i.e. mean one and variance ``1 / alpha_bar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .errors import (
    InvalidParameterError,
    NonPositiveArgumentError,
    RankDeficientDataError,
    SingularDispersionError,
)

LAMBDA = -0.5
ALPHA_BOUNDS = (1e-3, 1e3)


# --------------------------------------------------------------------------
# Bessel functions
# --------------------------------------------------------------------------


def bessel_k(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveArgumentError("bessel_k needs x > 0")
    out = special.kv(nu, x)
    return out[()] if np.ndim(out) == 0 else out


def log_bessel_k(nu, x):
    """``log K_nu(x)`` without underflow for large ``x`` (uses the scaled ``kve``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveArgumentError("log_bessel_k needs x > 0")
    out = np.log(special.kve(nu, x)) - x
    return out[()] if np.ndim(out) == 0 else out


def bessel_ratio(nu, x, shift: float = 1.0):
    """``K_{nu+shift}(x) / K_nu(x)`` computed from scaled values."""
    x = np.asarray(x, dtype=float)
    return special.kve(nu + shift, x) / special.kve(nu, x)


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NigParams:
    alpha_bar: float
    mu: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        d = mu.size
        if gamma.shape != (d,) or sigma.shape != (d, d):
            raise InvalidParameterError("mu, gamma and sigma dimensions disagree")
        if not (self.alpha_bar > 0 and np.isfinite(self.alpha_bar)):
            raise InvalidParameterError("alpha_bar must be positive and finite")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-14):
            raise SingularDispersionError("sigma must be symmetric")
        object.__setattr__(self, "alpha_bar", float(self.alpha_bar))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma", 0.5 * (sigma + sigma.T))

    @property
    def lam(self) -> float:
        return LAMBDA

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def mixing_variance(self) -> float:
        return 1.0 / self.alpha_bar

    def mean(self) -> np.ndarray:
        return self.mu + self.gamma

    def covariance(self) -> np.ndarray:
        return self.sigma + self.mixing_variance * np.outer(self.gamma, self.gamma)

    def cholesky(self) -> np.ndarray:
        return _cholesky(self.sigma)


def _cholesky(sigma: np.ndarray, regularize: bool = True) -> np.ndarray:
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        if not regularize:
            raise SingularDispersionError("dispersion matrix is not positive definite")
    d = sigma.shape[0]
    jitter = 1e-10 * max(np.trace(sigma) / d, 1e-300)
    try:
        return linalg.cholesky(sigma + jitter * np.eye(d), lower=True)
    except linalg.LinAlgError as exc:
        raise SingularDispersionError("dispersion matrix is not positive definite") from exc


@dataclass(frozen=True)
class ClassicalNig:
    """``(alpha, beta, delta, mu, Delta)`` form with ``det(Delta) = 1``."""

    alpha: float
    beta: np.ndarray
    delta: float
    mu: np.ndarray
    Delta: np.ndarray


def gig_mean_ratio(alpha_bar: float, lam: float = LAMBDA) -> float:
    """``K_{lam+1}(a) / K_lam(a)``; identically one for ``lam = -1/2``."""
    return float(bessel_ratio(lam, alpha_bar))


def to_classical(params: NigParams) -> ClassicalNig:
    d = params.dim
    sign, logdet = np.linalg.slogdet(params.sigma)
    if sign <= 0:
        raise SingularDispersionError("sigma must be positive definite")
    k = math.exp(logdet / d)
    Delta = params.sigma / k
    beta = linalg.cho_solve((params.cholesky(), True), params.gamma)
    # alpha_bar = delta * sqrt(alpha^2 - beta'Delta beta) and k = delta / sqrt(...) * ratio
    ratio = gig_mean_ratio(params.alpha_bar)
    delta = math.sqrt(k * params.alpha_bar / ratio)
    root = params.alpha_bar / delta
    alpha = math.sqrt(root**2 + float(beta @ Delta @ beta))
    return ClassicalNig(alpha, beta, delta, params.mu.copy(), Delta)


def from_classical(c: ClassicalNig) -> NigParams:
    Delta = np.atleast_2d(np.asarray(c.Delta, dtype=float))
    beta = np.atleast_1d(np.asarray(c.beta, dtype=float))
    q = c.alpha**2 - float(beta @ Delta @ beta)
    if q <= 0:
        raise InvalidParameterError("need alpha^2 > beta' Delta beta")
    alpha_bar = math.sqrt(c.delta**2 * q)
    k = math.sqrt(c.delta**2 / q) * gig_mean_ratio(alpha_bar)
    return NigParams(alpha_bar, np.asarray(c.mu, dtype=float), k * Delta @ beta, k * Delta)


def classical_log_density(x, c: ClassicalNig):
    """Log density in the classical form; valid for any ``Delta`` (not only ``det = 1``)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    Delta = np.atleast_2d(c.Delta)
    d = Delta.shape[0]
    if x.shape[1] != d:
        x = x.reshape(-1, d)
    L = _cholesky(Delta, regularize=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    dev = x - c.mu
    z = linalg.solve_triangular(L, dev.T, lower=True)
    Q = np.sum(z * z, axis=0)
    s = Q + c.delta**2
    nu = 0.5 * (d + 1)
    root = math.sqrt(c.alpha**2 - float(c.beta @ Delta @ c.beta))
    return (
        0.5 * math.log(2.0 / math.pi)
        + math.log(c.delta)
        + nu * math.log(c.alpha)
        - 0.5 * d * math.log(2.0 * math.pi)
        - 0.5 * logdet
        + c.delta * root
        - 0.5 * nu * np.log(s)
        + log_bessel_k(nu, c.alpha * np.sqrt(s))
        + dev @ c.beta
    )


def nig_log_density(x, params: NigParams):
    """Log density at each row of ``x`` (a scalar for a single point)."""
    x_arr = np.asarray(x, dtype=float)
    out = classical_log_density(x_arr.reshape(-1, params.dim), to_classical(params))
    if x_arr.ndim <= 1 and out.size == 1 and (x_arr.ndim == 0 or x_arr.size == params.dim):
        return float(out[0])
    return out


def nig_loglik(data, params: NigParams) -> float:
    return float(np.sum(nig_log_density(np.atleast_2d(data), params)))


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def sample_gig(chi: float, psi: float, n: int, seed=None, lam: float = LAMBDA) -> np.ndarray:
    """Draws from GIG(-1/2, chi, psi), i.e. inverse Gaussian with mean sqrt(chi/psi), shape chi.

    Uses the Michael-Schucany-Haas transformation: one normal and one uniform
    per draw.
    """
    if lam != LAMBDA:
        raise InvalidParameterError("only the inverse Gaussian case lam = -1/2 is supported")
    if not (chi > 0 and psi > 0):
        raise InvalidParameterError("chi and psi must be positive")
    rng = np.random.default_rng(seed)
    m = math.sqrt(chi / psi)
    shape = chi
    y = rng.standard_normal(n) ** 2
    u = rng.random(n)
    my = m * y
    x = m + m * my / (2 * shape) - (m / (2 * shape)) * np.sqrt(4 * shape * my + my * my)
    # guard the cancellation in the root for tiny draws
    x = np.where(x > 0, x, m * m / (m + my))
    return np.where(u <= m / (m + x), x, m * m / x)


def sample_nig(params: NigParams, n: int, seed=None) -> np.ndarray:
    """``n`` draws of the mean-variance mixture, shape ``(n, dim)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    L = params.cholesky()
    z = sample_gig(params.alpha_bar, params.alpha_bar, n, rng)
    w = rng.standard_normal((n, params.dim))
    return params.mu + z[:, None] * params.gamma + np.sqrt(z)[:, None] * (w @ L.T)


# --------------------------------------------------------------------------
# EM
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GigMoments:
    e_z: np.ndarray
    e_inv: np.ndarray
    e_log: np.ndarray


def gig_moments(lam, chi, psi, log_moment: bool = True) -> GigMoments:
    """``E[Z]``, ``E[1/Z]`` and ``E[log Z]`` of GIG(lam, chi, psi) (vectorized in chi)."""
    chi = np.asarray(chi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    om = np.sqrt(chi * psi)
    r = np.sqrt(chi / psi)
    k0 = special.kve(lam, om)
    e_z = r * special.kve(lam + 1, om) / k0
    e_inv = special.kve(lam - 1, om) / k0 / r
    if log_moment:
        h = 1e-5
        dlog = (np.log(special.kve(lam + h, om)) - np.log(special.kve(lam - h, om))) / (2 * h)
        e_log = np.log(r) + dlog
    else:
        e_log = np.full_like(e_z, np.nan)
    return GigMoments(e_z, e_inv, e_log)


@dataclass
class EmTrace:
    loglik: list = field(default_factory=list)
    params: list = field(default_factory=list)
    converged: bool = False
    n_iter: int = 0


def _e_step(x, p: NigParams, L):
    d = p.dim
    dev = x - p.mu
    z = linalg.solve_triangular(L, dev.T, lower=True)
    Q = np.sum(z * z, axis=0)
    g = linalg.solve_triangular(L, p.gamma, lower=True)
    chi = p.alpha_bar + Q
    psi = p.alpha_bar + float(g @ g)
    return gig_moments(LAMBDA - 0.5 * d, chi, psi, log_moment=False)


def _m_step(x, mom: GigMoments) -> NigParams:
    n, d = x.shape
    e_inv, e_z = mom.e_inv, mom.e_z
    dbar = e_inv.mean()
    ebar = e_z.mean()
    xbar = x.mean(axis=0)
    wx = (e_inv[:, None] * x).mean(axis=0)
    gamma = (dbar * xbar - wx) / (dbar * ebar - 1.0)
    mu = (wx - gamma) / dbar
    dev = x - mu
    sigma = (dev.T * e_inv) @ dev / n - ebar * np.outer(gamma, gamma)
    a = 1.0 / max(dbar + ebar - 2.0, 1e-300)
    a = float(np.clip(a, *ALPHA_BOUNDS))
    return NigParams(a, mu, gamma, 0.5 * (sigma + sigma.T))


def fit_nig_em(data, tol: float = 1e-7, max_iter: int = 500, seed=None) -> tuple[NigParams, EmTrace]:
    """Maximum-likelihood NIG fit by EM.

    Starts from the sample mean, zero skewness, the sample covariance and
    ``alpha_bar = 1``.  Every M-step is exact (closed form), so the
    log-likelihood recorded in the trace never decreases.  Stops when the
    relative change of the log-likelihood drops below ``tol``; if ``max_iter``
    is hit the best parameters so far are returned with ``converged=False``.
    ``seed`` is accepted for interface symmetry; the algorithm is deterministic.
    """
    x = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = x.shape
    if n <= d + 2:
        raise RankDeficientDataError(f"need more than {d + 2} observations, got {n}")
    if np.linalg.matrix_rank(x - x.mean(axis=0)) < d:
        raise RankDeficientDataError("data does not have full column rank")
    params = NigParams(1.0, x.mean(axis=0), np.zeros(d), np.cov(x, rowvar=False).reshape(d, d))
    trace = EmTrace()
    best, best_ll = params, -np.inf
    prev = None
    for it in range(max_iter):
        L = params.cholesky()
        ll = nig_loglik(x, params)
        trace.loglik.append(ll)
        trace.params.append(params)
        trace.n_iter = it + 1
        if ll > best_ll:
            best, best_ll = params, ll
        if prev is not None and abs(ll - prev) <= tol * abs(prev):
            trace.converged = True
            break
        prev = ll
        mom = _e_step(x, params, L)
        params = _m_step(x, mom)
    return best, trace


# --------------------------------------------------------------------------
# text record
# --------------------------------------------------------------------------


def params_to_record(p: NigParams) -> str:
    fmt = lambda v: " ".join(repr(float(t)) for t in np.ravel(v))  # noqa: E731
    return (
        "# nig parameter record v1\n"
        f"lambda = {LAMBDA!r}\n"
        f"dim = {p.dim}\n"
        f"alpha_bar = {p.alpha_bar!r}\n"
        f"mu = {fmt(p.mu)}\n"
        f"gamma = {fmt(p.gamma)}\n"
        f"sigma = {fmt(p.sigma)}\n"
    )


def params_from_record(text: str) -> NigParams:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            kv[k.strip()] = v.strip()
    if float(kv.get("lambda", LAMBDA)) != LAMBDA:
        raise InvalidParameterError("record is not an NIG parameter set")
    d = int(kv["dim"])
    vec = lambda k: np.array([float(t) for t in kv[k].split()])  # noqa: E731
    return NigParams(float(kv["alpha_bar"]), vec("mu"), vec("gamma"), vec("sigma").reshape(d, d))
