from .portfolio import (
    OptConfig,
    OptResult,
    ScenarioMatrix,
    build_dual_lp,
    build_lp,
    cvar_and_var,
    cvar_of_weights,
    optimize_portfolio,
)
from .simplex import LpProblem, LpSolution, dump_lp, load_lp, scipy_solver, solve_lp

__all__ = [
    "LpProblem",
    "LpSolution",
    "OptConfig",
    "OptResult",
    "ScenarioMatrix",
    "build_dual_lp",
    "build_lp",
    "cvar_and_var",
    "cvar_of_weights",
    "dump_lp",
    "load_lp",
    "optimize_portfolio",
    "scipy_solver",
    "solve_lp",
]
