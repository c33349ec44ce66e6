"""M-estimation of the linear factor model by iteratively reweighted least squares."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientRowsError, SingularDesignError

MAD_CONSTANT = 0.6745
DEFAULT_KAPPA = {"huber": 1.345, "tukey": 4.685}


@dataclass(frozen=True)
class RobustConfig:
    loss: str = "huber"
    kappa: float | None = None
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.loss not in DEFAULT_KAPPA:
            raise ValueError(f"loss must be one of {sorted(DEFAULT_KAPPA)}")
        if self.kappa is None:
            object.__setattr__(self, "kappa", DEFAULT_KAPPA[self.loss])
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class RobustFit:
    intercept: float
    coef: np.ndarray
    weights: np.ndarray
    scale: float
    residuals: np.ndarray
    iterations: int
    config: RobustConfig
    objective_trace: tuple = ()
    pvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagnostics: dict = field(default_factory=dict)

    kind = "rlr"

    @property
    def edf(self) -> float:
        return 1.0 + self.coef.size

    def predict(self, f_row) -> np.ndarray | float:
        f = np.asarray(f_row, dtype=float)
        out = self.intercept + f @ self.coef
        return out[()] if np.ndim(out) == 0 else out


def robust_loss(x, cfg: RobustConfig):
    """Return ``(rho, psi, weight)`` of the configured loss at scaled residual ``x``."""
    x = np.asarray(x, dtype=float)
    k = cfg.kappa
    ax = np.abs(x)
    inside = ax <= k
    if cfg.loss == "tukey":
        t = 1.0 - (x / k) ** 2
        rho = np.where(inside, k * k / 6.0 * (1.0 - t**3), k * k / 6.0)
        psi = np.where(inside, x * t**2, 0.0)
        w = np.where(inside, t**2, 0.0)
    else:
        rho = np.where(inside, 0.5 * x * x, k * ax - 0.5 * k * k)
        psi = np.clip(x, -k, k)
        with np.errstate(divide="ignore"):
            w = np.where(inside, 1.0, k / ax)
    if rho.ndim == 0:
        return float(rho), float(psi), float(w)
    return rho, psi, w


def mad_scale(residuals) -> float:
    x = np.asarray(residuals, dtype=float)
    if x.size < 2:
        raise InsufficientRowsError("need at least two residuals")
    return float(np.median(np.abs(x - np.median(x))) / MAD_CONSTANT)


def _wls(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    beta, _, rank, _ = np.linalg.lstsq(Xw, y * sw, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(f"weighted design has rank {rank} < {X.shape[1]}")
    return beta


def _design(F: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(F.shape[0]), F])


def fit_rlr(h, F, cfg: RobustConfig = RobustConfig(), scale: float | None = None) -> RobustFit:
    """Robust regression of ``h`` on an intercept and the columns of ``F``.

    Starts from OLS; each iteration re-estimates the MAD scale of the residuals
    (unless ``scale`` is fixed), recomputes weights and solves the weighted
    normal equations.  Stops when the largest coefficient change falls below
    ``cfg.tol``.  Constant factor columns are collinear with the intercept and
    get a zero coefficient.
    """
    h = np.asarray(h, dtype=float).ravel()
    F = np.asarray(F, dtype=float).reshape(h.size, -1)
    n, k = F.shape
    if n <= k + 1:
        raise InsufficientRowsError(f"need more than {k + 1} rows, got {n}")
    active = np.ptp(F, axis=0) > 0 if k else np.zeros(0, dtype=bool)
    X = _design(F[:, active])
    beta = _wls(X, h, np.ones(n))
    trace = []
    it = 0
    w = np.ones(n)
    s = scale
    for it in range(1, cfg.max_iter + 1):
        resid = h - X @ beta
        s = mad_scale(resid) if scale is None else float(scale)
        if s <= 1e-14 * max(1.0, float(np.max(np.abs(h)))):
            # exact fit on at least half the sample: keep it
            w = (np.abs(resid) <= 1e-12 * max(1.0, float(np.max(np.abs(h))))).astype(float)
            s = 0.0
            break
        rho, _, w = robust_loss(resid / s, cfg)
        trace.append(float(np.sum(rho)))
        new = _wls(X, h, w)
        step = np.max(np.abs(new - beta))
        beta = new
        if step < cfg.tol:
            break
    resid = h - X @ beta
    if s and s > 0:
        rho, _, w = robust_loss(resid / s, cfg)
        trace.append(float(np.sum(rho)))
    coef = np.zeros(k)
    coef[active] = beta[1:]
    pvals = _wald_pvalues(X, beta, resid, w, s, active)
    return RobustFit(
        intercept=float(beta[0]),
        coef=coef,
        weights=np.asarray(w, dtype=float),
        scale=float(s),
        residuals=resid,
        iterations=it,
        config=cfg,
        objective_trace=tuple(trace),
        pvalues=pvals,
    )


def _wald_pvalues(X, beta, resid, w, s, active) -> np.ndarray:
    """Two-sided normal p-values of the slope coefficients (1 for dropped columns)."""
    from scipy import stats

    k = active.size
    out = np.ones(k)
    if k == 0 or not active.any():
        return out
    n, p = X.shape
    sigma = s if s and s > 0 else np.sqrt(np.sum(resid**2) / max(n - p, 1))
    G = X.T @ (X * w[:, None])
    try:
        cov = sigma**2 * np.linalg.inv(G)
    except np.linalg.LinAlgError:
        return out
    se = np.sqrt(np.clip(np.diag(cov)[1:], 1e-300, None))
    out[active] = 2.0 * stats.norm.sf(np.abs(beta[1:]) / se)
    return out
