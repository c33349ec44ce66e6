"""Rolling backtest, cost accounting, performance metrics and reports."""

from .engine import (
    ALPHA_GRID,
    BacktestConfig,
    BacktestLedger,
    BacktestRun,
    WindowModel,
    ewbh_benchmark,
    fit_window,
    run_backtest,
    scenario_seed,
    simulate_scenarios,
    strategy_label,
)
from .metrics import (
    MetricsReport,
    Ratios,
    apply_costs,
    average_turnover,
    compute_metrics,
    cvar_empirical,
    describe,
    gini_mean_difference,
    max_drawdown,
    rr_ratios,
)
from .pca import PcaDynamics, eigen_shares, n_components_for, pca_explained_dynamics, top_k_share

__all__ = [
    "ALPHA_GRID",
    "BacktestConfig",
    "BacktestLedger",
    "BacktestRun",
    "MetricsReport",
    "PcaDynamics",
    "Ratios",
    "WindowModel",
    "apply_costs",
    "average_turnover",
    "compute_metrics",
    "cvar_empirical",
    "describe",
    "eigen_shares",
    "ewbh_benchmark",
    "fit_window",
    "gini_mean_difference",
    "max_drawdown",
    "n_components_for",
    "pca_explained_dynamics",
    "rr_ratios",
    "run_backtest",
    "scenario_seed",
    "simulate_scenarios",
    "strategy_label",
    "top_k_share",
]
