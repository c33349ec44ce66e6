"""Factor regressions of standardized innovations: robust linear and additive P-spline."""

from .gam import LAMBDA_GRID, GamFit, build_design, fit_gam, penalty_matrix
from .model import (
    FACTOR_MODELS,
    Diagnostics,
    FactorFit,
    PassThroughFit,
    diagnostics,
    fit_factor_model,
    predict,
    pvalue_flags,
)
from .robust import DEFAULT_KAPPA, RobustConfig, RobustFit, fit_rlr, mad_scale, robust_loss
from .splines import SplineBasis, basis_matrix, bspline_basis

__all__ = [
    "DEFAULT_KAPPA",
    "FACTOR_MODELS",
    "LAMBDA_GRID",
    "Diagnostics",
    "FactorFit",
    "GamFit",
    "PassThroughFit",
    "RobustConfig",
    "RobustFit",
    "SplineBasis",
    "basis_matrix",
    "bspline_basis",
    "build_design",
    "diagnostics",
    "fit_factor_model",
    "fit_gam",
    "fit_rlr",
    "mad_scale",
    "penalty_matrix",
    "predict",
    "pvalue_flags",
    "robust_loss",
]
