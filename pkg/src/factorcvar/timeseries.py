"""ARMA(p, q)-GARCH(P, Q) filters fitted by Gaussian quasi-maximum likelihood.

Mean and variance recursions::

    r_t      = c1 + sum_j ar_j r_{t-j} + sum_j ma_j eps_{t-j} + eps_t
    sigma2_t = c2 + sum_j arch_j eps_{t-j}^2 + sum_j garch_j sigma2_{t-j}

``P`` counts the lagged-variance (``garch``) terms and ``Q`` the lagged squared
residual (``arch``) terms.  Pre-sample residuals are zero, pre-sample variances
equal the sample variance of the window and pre-sample returns equal its mean.

Estimation runs a compiled Nelder-Mead search on an unconstrained
reparametrization: partial autocorrelations through ``tanh`` for the AR and MA
polynomials, ``exp`` for the variance constant and a logistic map onto the open
simplex ``sum(garch) + sum(arch) < 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import (
    AllFitsFailedError,
    ConstantSeriesError,
    MissingStateError,
    OptimizerDivergedError,
)

ORDERS = (0, 1, 2)
MIN_OBS = 50
STATIONARITY_MARGIN = 0.999
_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, order=True)
class ArmaGarchSpec:
    p: int = 0
    q: int = 0
    P: int = 0
    Q: int = 0

    def __post_init__(self):
        for name in ("p", "q", "P", "Q"):
            if getattr(self, name) not in ORDERS:
                raise ValueError(f"order {name}={getattr(self, name)} not in {ORDERS}")

    @property
    def n_params(self) -> int:
        return 2 + self.p + self.q + self.P + self.Q

    def __str__(self) -> str:
        return f"ARMA({self.p},{self.q})-GARCH({self.P},{self.Q})"


def all_specs(max_arma: int = 2, max_garch: int = 2) -> list[ArmaGarchSpec]:
    """Every spec with orders up to the given maxima, in lexicographic order."""
    ra, rg = range(max_arma + 1), range(max_garch + 1)
    return [ArmaGarchSpec(p, q, P, Q) for p, q, P, Q in itertools.product(ra, ra, rg, rg)]


@dataclass(frozen=True)
class ArmaGarchFit:
    spec: ArmaGarchSpec
    c1: float
    ar: np.ndarray
    ma: np.ndarray
    c2: float
    garch: np.ndarray
    arch: np.ndarray
    sigma2: np.ndarray
    eps: np.ndarray
    h: np.ndarray
    loglik: float
    bic: float
    n_obs: int
    returns: np.ndarray
    mean0: float
    var0: float
    converged: bool = True
    candidates: tuple = field(default=(), compare=False, repr=False)

    @property
    def persistence(self) -> float:
        return float(np.sum(self.garch) + np.sum(self.arch))

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([[self.c1], self.ar, self.ma, [self.c2], self.garch, self.arch])

    def param_names(self) -> list[str]:
        s = self.spec
        return (
            ["c1"]
            + [f"ar{j + 1}" for j in range(s.p)]
            + [f"ma{j + 1}" for j in range(s.q)]
            + ["c2"]
            + [f"garch{j + 1}" for j in range(s.P)]
            + [f"arch{j + 1}" for j in range(s.Q)]
        )


def bic(loglik: float, k: int, n: float) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return k * math.log(n) - 2.0 * loglik


# --------------------------------------------------------------------------
# compiled core
# --------------------------------------------------------------------------


@njit(cache=True)
def _filter(r, c1, ar, ma, c2, garch, arch, mean0, var0, eps, sig2):
    n = r.shape[0]
    ll = 0.0
    for t in range(n):
        s = c2
        for j in range(arch.shape[0]):
            k = t - 1 - j
            if k >= 0:
                s += arch[j] * eps[k] * eps[k]
        for j in range(garch.shape[0]):
            k = t - 1 - j
            s += garch[j] * (sig2[k] if k >= 0 else var0)
        if not (s > 0.0) or not np.isfinite(s):
            return -np.inf
        sig2[t] = s
        m = c1
        for j in range(ar.shape[0]):
            k = t - 1 - j
            m += ar[j] * (r[k] if k >= 0 else mean0)
        for j in range(ma.shape[0]):
            k = t - 1 - j
            if k >= 0:
                m += ma[j] * eps[k]
        e = r[t] - m
        eps[t] = e
        ll -= 0.5 * (_LOG2PI + math.log(s) + e * e / s)
    if not np.isfinite(ll):
        return -np.inf
    return ll


@njit(cache=True)
def _defilter(h, c1, ar, ma, c2, garch, arch, mean0, var0, r, eps, sig2):
    n = h.shape[0]
    for t in range(n):
        s = c2
        for j in range(arch.shape[0]):
            k = t - 1 - j
            if k >= 0:
                s += arch[j] * eps[k] * eps[k]
        for j in range(garch.shape[0]):
            k = t - 1 - j
            s += garch[j] * (sig2[k] if k >= 0 else var0)
        sig2[t] = s
        m = c1
        for j in range(ar.shape[0]):
            k = t - 1 - j
            m += ar[j] * (r[k] if k >= 0 else mean0)
        for j in range(ma.shape[0]):
            k = t - 1 - j
            if k >= 0:
                m += ma[j] * eps[k]
        e = math.sqrt(s) * h[t]
        eps[t] = e
        r[t] = m + e


@njit(cache=True)
def _pacf_to_coef(u):
    m = u.shape[0]
    out = np.zeros(m)
    if m == 1:
        out[0] = math.tanh(u[0])
    elif m == 2:
        p1 = math.tanh(u[0])
        p2 = math.tanh(u[1])
        out[0] = p1 * (1.0 - p2)
        out[1] = p2
    return out


@njit(cache=True)
def _unpack(u, p, q, P, Q, sd0, var0):
    c1 = sd0 * u[0]
    i = 1
    ar = _pacf_to_coef(u[i : i + p])
    i += p
    ma = -_pacf_to_coef(u[i : i + q])
    i += q
    c2 = var0 * math.exp(min(u[i], 50.0))
    i += 1
    m = P + Q
    z = np.empty(m)
    tot = 1.0
    for j in range(m):
        z[j] = math.exp(min(u[i + j], 50.0))
        tot += z[j]
    garch = z[:P] / tot
    arch = z[P:] / tot
    return c1, ar, ma, c2, garch, arch


@njit(cache=True)
def _objective(u, r, p, q, P, Q, mean0, sd0, var0, eps, sig2):
    c1, ar, ma, c2, garch, arch = _unpack(u, p, q, P, Q, sd0, var0)
    ll = _filter(r, c1, ar, ma, c2, garch, arch, mean0, var0, eps, sig2)
    if not np.isfinite(ll):
        return np.inf
    return -ll / r.shape[0]


@njit(cache=True)
def _nelder_mead(x0, step, r, p, q, P, Q, mean0, sd0, var0, ftol, maxfev):
    """Nelder-Mead on the mean negative log-likelihood.

    Stops once the best value improved by less than ``ftol`` over a full cycle
    of ``dim + 1`` iterations and the simplex values span less than ``ftol``.
    """
    n = x0.shape[0]
    eps = np.empty(r.shape[0])
    sig2 = np.empty(r.shape[0])
    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    sim[0] = x0
    fs[0] = _objective(x0, r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
    for i in range(n):
        x = x0.copy()
        x[i] += step[i]
        sim[i + 1] = x
        fs[i + 1] = _objective(x, r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
    nfev = n + 1
    it = 0
    cycle_best = np.inf
    converged = False
    while nfev < maxfev:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        if it % (n + 1) == 0:
            if cycle_best - fs[0] < ftol and fs[n] - fs[0] < ftol:
                converged = True
                break
            cycle_best = fs[0]
        it += 1
        cen = np.zeros(n)
        for i in range(n):
            cen += sim[i]
        cen /= n
        xr = cen + (cen - sim[n])
        fr = _objective(xr, r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
        nfev += 1
        if fr < fs[0]:
            xe = cen + 2.0 * (cen - sim[n])
            fe = _objective(xe, r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
            nfev += 1
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
        elif fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
        else:
            if fr < fs[n]:
                xc = cen + 0.5 * (xr - cen)
            else:
                xc = cen + 0.5 * (sim[n] - cen)
            fc = _objective(xc, r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
            nfev += 1
            if fc < min(fr, fs[n]):
                sim[n] = xc
                fs[n] = fc
            else:
                for i in range(1, n + 1):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fs[i] = _objective(sim[i], r, p, q, P, Q, mean0, sd0, var0, eps, sig2)
                nfev += n
    best = np.argmin(fs)
    return sim[best].copy(), fs[best], converged


# --------------------------------------------------------------------------
# parameter maps (python side)
# --------------------------------------------------------------------------


def _coef_to_pacf(coef: np.ndarray) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    if coef.size == 0:
        return coef
    if coef.size == 1:
        return np.arctanh(np.clip(coef, -0.99, 0.99))
    p2 = np.clip(coef[1], -0.99, 0.99)
    p1 = np.clip(coef[0] / (1.0 - p2), -0.99, 0.99)
    return np.arctanh(np.array([p1, p2]))


def _pack(spec, c1, ar, ma, c2, garch, arch, sd0, var0) -> np.ndarray:
    s = float(np.sum(garch) + np.sum(arch))
    rest = 1.0 - s
    simplex = np.log(np.maximum(np.concatenate([garch, arch]), 1e-8) / rest)
    return np.concatenate(
        [[c1 / sd0], _coef_to_pacf(ar), _coef_to_pacf(-np.asarray(ma)), [math.log(c2 / var0)], simplex]
    )


def _moment_start(r: np.ndarray, spec: ArmaGarchSpec) -> tuple:
    mean = float(r.mean())
    var = float(r.var())
    ar = np.zeros(spec.p)
    if spec.p:
        x = r - mean
        acf = np.array([np.dot(x[k:], x[: len(x) - k]) / np.dot(x, x) for k in range(spec.p + 1)])
        if spec.p == 1:
            ar[0] = acf[1]
        else:
            mat = np.array([[1.0, acf[1]], [acf[1], 1.0]])
            ar = np.linalg.solve(mat, acf[1:3])
        ar = np.clip(ar, -0.9, 0.9)
        if spec.p == 2 and (abs(ar[1]) > 0.9 or ar[0] + ar[1] > 0.95 or ar[1] - ar[0] > 0.95):
            ar = np.array([0.1, 0.0])
    ma = np.zeros(spec.q)
    c1 = mean * (1.0 - ar.sum())
    garch = np.full(spec.P, 0.8 / spec.P) if spec.P else np.zeros(0)
    arch = np.full(spec.Q, (0.1 if spec.P else 0.3) / spec.Q) if spec.Q else np.zeros(0)
    pers = garch.sum() + arch.sum()
    c2 = var * (1.0 - pers)
    return c1, ar, ma, c2, garch, arch


def _validate_series(returns) -> np.ndarray:
    r = np.ascontiguousarray(np.asarray(returns, dtype=float).ravel())
    if r.size < MIN_OBS:
        raise ValueError(f"need at least {MIN_OBS} observations, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("returns contain non-finite values")
    if np.ptp(r) == 0.0:
        raise ConstantSeriesError("series is constant")
    return r


def _build_fit(r, spec, c1, ar, ma, c2, garch, arch, mean0, var0, converged) -> ArmaGarchFit:
    n = r.size
    eps = np.empty(n)
    sig2 = np.empty(n)
    ll = _filter(r, c1, ar, ma, c2, garch, arch, mean0, var0, eps, sig2)
    if not np.isfinite(ll):
        raise OptimizerDivergedError(f"{spec}: non-finite likelihood at optimum")
    h = eps / np.sqrt(sig2)
    return ArmaGarchFit(
        spec=spec,
        c1=float(c1),
        ar=np.array(ar, dtype=float),
        ma=np.array(ma, dtype=float),
        c2=float(c2),
        garch=np.array(garch, dtype=float),
        arch=np.array(arch, dtype=float),
        sigma2=sig2,
        eps=eps,
        h=h,
        loglik=float(ll),
        bic=bic(ll, spec.n_params, n),
        n_obs=n,
        returns=r.copy(),
        mean0=mean0,
        var0=var0,
        converged=bool(converged),
    )


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------


def fit_arma_garch(
    returns,
    spec: ArmaGarchSpec = ArmaGarchSpec(),
    n_starts: int = 5,
    ftol: float = 1e-8,
    maxfev: int | None = None,
    seed: int = 0,
) -> ArmaGarchFit:
    """Gaussian QMLE of one ARMA-GARCH spec.

    The first start is moment based; the remaining ``n_starts - 1`` jitter it
    in the unconstrained space with a generator seeded by ``seed`` and the
    spec, so fits are reproducible.  A final polish restarts the simplex at the
    best point found.
    """
    r = _validate_series(returns)
    mean0 = float(r.mean())
    var0 = float(r.var())
    sd0 = math.sqrt(var0)
    start = _moment_start(r, spec)
    x0 = _pack(spec, *start, sd0, var0)
    dim = x0.size
    maxfev = maxfev or 300 * dim + 200
    step = np.full(dim, 0.3)
    rng = np.random.default_rng([seed, spec.p, spec.q, spec.P, spec.Q])
    best_x, best_f, best_conv = None, np.inf, False
    for k in range(max(1, n_starts)):
        xs = x0 if k == 0 else x0 + rng.normal(0.0, 0.5, dim)
        x, f, conv = _nelder_mead(xs, step, r, spec.p, spec.q, spec.P, spec.Q, mean0, sd0, var0, ftol, maxfev)
        if f < best_f:
            best_x, best_f, best_conv = x, f, conv
    if not np.isfinite(best_f):
        raise OptimizerDivergedError(f"{spec}: no finite likelihood found")
    x, f, conv = _nelder_mead(
        best_x, np.full(dim, 0.05), r, spec.p, spec.q, spec.P, spec.Q, mean0, sd0, var0, ftol, maxfev
    )
    if f <= best_f:
        best_x, best_conv = x, conv
    c1, ar, ma, c2, garch, arch = _unpack(best_x, spec.p, spec.q, spec.P, spec.Q, sd0, var0)
    return _build_fit(r, spec, c1, ar, ma, c2, garch, arch, mean0, var0, best_conv)


def _selection_key(fit: ArmaGarchFit):
    s = fit.spec
    return (fit.bic, s.n_params, (s.p, s.q, s.P, s.Q))


def select_model_bic(
    returns,
    specs=None,
    n_starts: int = 5,
    seed: int = 0,
    margin: float = STATIONARITY_MARGIN,
) -> ArmaGarchFit:
    """Fit every candidate spec and keep the one with the smallest BIC.

    Ties go to fewer parameters, then to the lexicographically smallest
    orders.  A winner whose persistence exceeds ``margin`` is replaced by the
    best candidate below it (when one exists).  The sorted candidate list is
    attached as ``fit.candidates``.
    """
    r = _validate_series(returns)
    specs = all_specs() if specs is None else list(specs)
    fits = []
    for spec in specs:
        try:
            fits.append(fit_arma_garch(r, spec, n_starts=n_starts, seed=seed))
        except (OptimizerDivergedError, FloatingPointError, np.linalg.LinAlgError):
            continue
    if not fits:
        raise AllFitsFailedError("every candidate spec failed to fit")
    fits.sort(key=_selection_key)
    chosen = fits[0]
    if chosen.persistence > margin:
        stable = [f for f in fits if f.persistence <= margin]
        if stable:
            chosen = stable[0]
    table = tuple((f.spec, f.bic, f.loglik) for f in fits)
    return replace(chosen, candidates=table)


def _check_state(fit: ArmaGarchFit) -> None:
    for name in ("returns", "eps", "sigma2"):
        v = getattr(fit, name)
        if v is None or np.size(v) == 0:
            raise MissingStateError(f"fit has no in-sample {name}")


def one_step_moments(fit: ArmaGarchFit) -> tuple[float, float]:
    """Conditional mean and variance of the next return given the in-sample state."""
    _check_state(fit)
    r, e, s2 = fit.returns, fit.eps, fit.sigma2
    n = len(r)

    def lag(x, j, pre):
        k = n - j
        return x[k] if k >= 0 else pre

    var = fit.c2
    for j, a in enumerate(fit.arch, start=1):
        var += a * lag(e, j, 0.0) ** 2
    for j, g in enumerate(fit.garch, start=1):
        var += g * lag(s2, j, fit.var0)
    mean = fit.c1
    for j, a in enumerate(fit.ar, start=1):
        mean += a * lag(r, j, fit.mean0)
    for j, b in enumerate(fit.ma, start=1):
        mean += b * lag(e, j, 0.0)
    return float(mean), float(var)


def forecast_one_step(fit: ArmaGarchFit, h_sim):
    """Map simulated standardized innovations to simulated next-period returns."""
    mean, var = one_step_moments(fit)
    h = np.asarray(h_sim, dtype=float)
    out = mean + math.sqrt(var) * h
    return out[()] if out.ndim == 0 else out


def defilter(fit: ArmaGarchFit, h) -> np.ndarray:
    """Rebuild a return path from standardized innovations with the fit's recursions."""
    h = np.ascontiguousarray(np.asarray(h, dtype=float))
    n = h.size
    r, eps, sig2 = np.empty(n), np.empty(n), np.empty(n)
    _defilter(h, fit.c1, fit.ar, fit.ma, fit.c2, fit.garch, fit.arch, fit.mean0, fit.var0, r, eps, sig2)
    return r


def loglik_at(fit: ArmaGarchFit, params) -> float:
    """Log-likelihood of the fit's data at natural parameters ``params`` (same layout as ``fit.params``)."""
    s = fit.spec
    c1, ar, ma, c2, garch, arch = split_params(s, params)
    n = fit.n_obs
    eps, sig2 = np.empty(n), np.empty(n)
    return float(_filter(fit.returns, c1, ar, ma, c2, garch, arch, fit.mean0, fit.var0, eps, sig2))


def split_params(spec: ArmaGarchSpec, params):
    v = np.asarray(params, dtype=float)
    i = 0
    c1 = v[i]
    i += 1
    ar = v[i : i + spec.p]
    i += spec.p
    ma = v[i : i + spec.q]
    i += spec.q
    c2 = v[i]
    i += 1
    garch = v[i : i + spec.P]
    i += spec.P
    arch = v[i : i + spec.Q]
    return c1, np.ascontiguousarray(ar), np.ascontiguousarray(ma), c2, np.ascontiguousarray(garch), np.ascontiguousarray(arch)


def is_feasible(spec: ArmaGarchSpec, params) -> bool:
    c1, ar, ma, c2, garch, arch = split_params(spec, params)
    if c2 <= 0 or np.any(garch < 0) or np.any(arch < 0) or garch.sum() + arch.sum() >= 1:
        return False
    return _roots_outside(ar) and _roots_outside(-ma)


def _roots_outside(coef) -> bool:
    coef = np.asarray(coef, dtype=float)
    if coef.size == 0:
        return True
    roots = np.roots(np.concatenate([-coef[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


def standard_errors(fit: ArmaGarchFit) -> np.ndarray:
    """Asymptotic standard errors from the inverse observed information.

    The Hessian of the log-likelihood in the natural parameters is taken by
    central differences.
    """
    theta = fit.params
    k = theta.size
    scale = np.abs(theta)
    names = fit.param_names()
    sd0 = math.sqrt(fit.var0)
    for i, nm in enumerate(names):
        if nm == "c1":
            scale[i] = max(scale[i], sd0 * 0.1)
        elif nm == "c2":
            scale[i] = max(scale[i], fit.var0 * 1e-3)
        else:
            scale[i] = max(scale[i], 0.1)
    step = 1e-4 * scale
    f0 = loglik_at(fit, theta)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = step[i]
        fp, fm = loglik_at(fit, theta + ei), loglik_at(fit, theta - ei)
        hess[i, i] = (fp - 2 * f0 + fm) / step[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = step[j]
            fpp = loglik_at(fit, theta + ei + ej)
            fpm = loglik_at(fit, theta + ei - ej)
            fmp = loglik_at(fit, theta - ei + ej)
            fmm = loglik_at(fit, theta - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * step[i] * step[j])
    cov = np.linalg.inv(-hess)
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def simulate_arma_garch(
    n: int,
    c1: float = 0.0,
    ar=(),
    ma=(),
    c2: float = 1e-5,
    garch=(),
    arch=(),
    rng: np.random.Generator | int | None = None,
    burn: int = 500,
    innovations=None,
) -> np.ndarray:
    """Simulate a return path; Gaussian innovations unless ``innovations`` is given."""
    rng = np.random.default_rng(rng)
    ar, ma, garch, arch = (np.asarray(a, dtype=float) for a in (ar, ma, garch, arch))
    total = n + burn
    h = rng.standard_normal(total) if innovations is None else np.asarray(innovations, dtype=float)
    if h.size != total:
        raise ValueError(f"innovations must have length n + burn = {total}")
    pers = garch.sum() + arch.sum()
    var0 = c2 / (1.0 - pers) if pers < 1 else c2
    mean0 = c1 / (1.0 - ar.sum()) if ar.size else c1
    r, eps, sig2 = np.empty(total), np.empty(total), np.empty(total)
    _defilter(np.ascontiguousarray(h), c1, ar, ma, c2, garch, arch, mean0, var0, r, eps, sig2)
    return r[burn:]


# --------------------------------------------------------------------------
# text record
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return " ".join(repr(float(x)) for x in v)


def fit_to_record(fit: ArmaGarchFit) -> str:
    """Serialize a fit as ``key = value`` lines (vectors space separated).

    The record carries the last two in-sample returns, residuals and variances,
    which is enough state for :func:`forecast_one_step`.
    """
    s = fit.spec
    tail = slice(max(0, fit.n_obs - 2), fit.n_obs)
    lines = [
        "# arma-garch fit record v1",
        f"p = {s.p}",
        f"q = {s.q}",
        f"P = {s.P}",
        f"Q = {s.Q}",
        f"c1 = {fit.c1!r}",
        f"ar = {_fmt(fit.ar)}",
        f"ma = {_fmt(fit.ma)}",
        f"c2 = {fit.c2!r}",
        f"garch = {_fmt(fit.garch)}",
        f"arch = {_fmt(fit.arch)}",
        f"loglik = {fit.loglik!r}",
        f"bic = {fit.bic!r}",
        f"n_obs = {fit.n_obs}",
        f"mean0 = {fit.mean0!r}",
        f"var0 = {fit.var0!r}",
        f"state.returns = {_fmt(fit.returns[tail])}",
        f"state.eps = {_fmt(fit.eps[tail])}",
        f"state.sigma2 = {_fmt(fit.sigma2[tail])}",
    ]
    return "\n".join(lines) + "\n"


def fit_from_record(text: str) -> ArmaGarchFit:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()

    def vec(key):
        return np.array([float(x) for x in kv.get(key, "").split()], dtype=float)

    spec = ArmaGarchSpec(int(kv["p"]), int(kv["q"]), int(kv["P"]), int(kv["Q"]))
    eps = vec("state.eps")
    sig2 = vec("state.sigma2")
    return ArmaGarchFit(
        spec=spec,
        c1=float(kv["c1"]),
        ar=vec("ar"),
        ma=vec("ma"),
        c2=float(kv["c2"]),
        garch=vec("garch"),
        arch=vec("arch"),
        sigma2=sig2,
        eps=eps,
        h=eps / np.sqrt(sig2) if sig2.size else sig2,
        loglik=float(kv["loglik"]),
        bic=float(kv["bic"]),
        n_obs=int(kv["n_obs"]),
        returns=vec("state.returns"),
        mean0=float(kv["mean0"]),
        var0=float(kv["var0"]),
    )
