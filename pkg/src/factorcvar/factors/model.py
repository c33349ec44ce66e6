"""Common front for the factor regressions: fitting by name, prediction, diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .gam import GamFit, fit_gam
from .robust import RobustConfig, RobustFit, fit_rlr
from .splines import SplineBasis

FACTOR_MODELS = ("none", "rlr", "gam")


@dataclass(frozen=True)
class PassThroughFit:
    """No factor model: residuals are the innovations themselves."""

    residuals: np.ndarray
    n_factors: int = 0
    pvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagnostics: dict = field(default_factory=dict)

    kind = "none"
    edf = 0.0

    def predict(self, f_row):
        f = np.asarray(f_row, dtype=float)
        return 0.0 if f.ndim <= 1 else np.zeros(f.shape[0])


FactorFit = Union[PassThroughFit, RobustFit, GamFit]


def fit_factor_model(
    kind: str,
    h,
    F=None,
    robust: RobustConfig | None = None,
    basis: SplineBasis | None = None,
    lambdas="auto",
) -> FactorFit:
    h = np.asarray(h, dtype=float).ravel()
    if kind == "none" or F is None:
        return PassThroughFit(h.copy(), 0 if F is None else np.shape(F)[1])
    if kind == "rlr":
        return fit_rlr(h, F, robust or RobustConfig())
    if kind == "gam":
        return fit_gam(h, F, basis or SplineBasis(), lambdas)
    raise ValueError(f"unknown factor model {kind!r}; expected one of {FACTOR_MODELS}")


def predict(fit: FactorFit, f_row):
    """Conditional mean of the innovation given a factor row (or matrix of rows)."""
    return fit.predict(f_row)


@dataclass(frozen=True)
class Diagnostics:
    adj_r2: float
    mae: float
    bic: float
    edf: float


def diagnostics(fit: FactorFit, h, F=None) -> Diagnostics:
    """Adjusted R^2, mean absolute error and Gaussian BIC with effective degrees of freedom."""
    h = np.asarray(h, dtype=float).ravel()
    n = h.size
    if isinstance(fit, PassThroughFit) or F is None:
        xi = h.copy()
    else:
        xi = h - np.asarray(fit.predict(np.asarray(F, dtype=float).reshape(n, -1)), dtype=float)
    edf = float(fit.edf)
    rss = float(np.sum(xi**2))
    tss = float(np.sum((h - h.mean()) ** 2))
    if tss == 0.0:
        adj = 1.0 if rss == 0.0 else float("nan")
    else:
        adj = 1.0 - (rss / max(n - edf, 1e-12)) / (tss / (n - 1))
    mae = float(np.mean(np.abs(xi)))
    if rss > 0:
        loglik = -0.5 * n * (math.log(2 * math.pi * rss / n) + 1.0)
        bic = edf * math.log(n) - 2.0 * loglik
    else:
        bic = float("-inf")
    return Diagnostics(float(adj), mae, float(bic), edf)


def pvalue_flags(fit: FactorFit, level: float = 0.05) -> str:
    """Semicolon-separated 0/1 flags, one per factor, for p-values below ``level``."""
    p = np.asarray(getattr(fit, "pvalues", ()), dtype=float)
    return ";".join("1" if v < level else "0" for v in p)
