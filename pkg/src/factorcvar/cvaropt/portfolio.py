"""Mean-CVaR portfolio selection over a finite scenario set.

With scenario portfolio returns ``x_s = r_s' theta`` (equal scenario
probabilities) the program is::

    min  -alpha mu'theta + (1 - alpha) [nu + sum_s u_s / (S (1 - beta))]
    s.t. sum theta = 1,  theta >= 0,  nu free,
         u_s >= -x_s - nu,  u_s >= 0,
         optionally |theta - prev| <= d,  sum d <= cap.

The primal has one row per scenario.  Its LP dual has one bounded column per
scenario and only ``I + 1`` (``2I + 1`` with turnover) rows, which suits the
bounded-variable simplex much better at thousands of scenarios.  By default
the dual is solved and the primal weights are read off its row duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfigError, NumericalFailureError
from .simplex import LpProblem, LpSolution, LpSolver, solve_lp


@dataclass(frozen=True)
class ScenarioMatrix:
    """``S x I`` simple one-period returns, columns in universe order."""

    returns: np.ndarray
    tickers: tuple = ()

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.returns, dtype=float))
        if r.shape[0] < 1 or r.shape[1] < 1:
            raise InvalidConfigError("scenario matrix needs S >= 1 and I >= 1")
        if not np.all(np.isfinite(r)):
            raise InvalidConfigError("scenario returns must be finite")
        if self.tickers and len(self.tickers) != r.shape[1]:
            raise InvalidConfigError("one ticker per scenario column")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "tickers", tuple(self.tickers))

    @classmethod
    def from_log_returns(cls, log_returns, tickers=()):
        return cls(np.expm1(np.asarray(log_returns, dtype=float)), tickers)

    @property
    def n_scenarios(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.returns.mean(axis=0)


@dataclass(frozen=True)
class OptConfig:
    alpha: float
    beta: float = 0.99
    prev_weights: np.ndarray | None = None
    turnover_cap: float | None = 0.05
    lp_tol: float = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfigError("alpha must lie in [0, 1]")
        if not 0.0 < self.beta < 1.0:
            raise InvalidConfigError("beta must lie in (0, 1)")
        if self.lp_tol <= 0:
            raise InvalidConfigError("lp_tol must be positive")
        if self.prev_weights is not None:
            w = np.asarray(self.prev_weights, dtype=float).ravel()
            if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-8:
                raise InvalidConfigError("prev_weights must lie on the simplex")
            object.__setattr__(self, "prev_weights", w)
        if self.turnover_cap is not None and self.turnover_cap < 0:
            raise InvalidConfigError("turnover_cap must be non-negative")

    @property
    def has_turnover(self) -> bool:
        return self.prev_weights is not None and self.turnover_cap is not None


@dataclass(frozen=True)
class OptResult:
    weights: np.ndarray
    nu: float
    objective: float
    expected_return: float
    cvar: float
    status: str
    info: dict = field(default_factory=dict)


def _check(scen: ScenarioMatrix, cfg: OptConfig) -> None:
    if cfg.prev_weights is not None and cfg.prev_weights.size != scen.n_assets:
        raise InvalidConfigError("prev_weights length must equal the number of assets")


def _tail_coef(S: int, cfg: OptConfig) -> float:
    return (1.0 - cfg.alpha) / (S * (1.0 - cfg.beta))


def build_lp(scen: ScenarioMatrix, cfg: OptConfig) -> LpProblem:
    """Primal program; variables ordered ``theta (I), nu, u (S)[, d (I)]``."""
    _check(scen, cfg)
    R = scen.returns
    S, I = R.shape
    turn = cfg.has_turnover
    n = I + 1 + S + (I if turn else 0)
    c = np.zeros(n)
    c[:I] = -cfg.alpha * scen.mean
    c[I] = 1.0 - cfg.alpha
    c[I + 1 : I + 1 + S] = _tail_coef(S, cfg)
    rows, senses, rhs = [], [], []
    budget = np.zeros(n)
    budget[:I] = 1.0
    rows.append(budget), senses.append("="), rhs.append(1.0)
    scen_rows = np.zeros((S, n))
    scen_rows[:, :I] = R
    scen_rows[:, I] = 1.0
    scen_rows[np.arange(S), I + 1 + np.arange(S)] = 1.0
    rows.extend(scen_rows), senses.extend([">="] * S), rhs.extend([0.0] * S)
    if turn:
        prev = cfg.prev_weights
        d0 = I + 1 + S
        for i in range(I):
            a = np.zeros(n)
            a[d0 + i], a[i] = 1.0, -1.0
            rows.append(a), senses.append(">="), rhs.append(-prev[i])
            a = np.zeros(n)
            a[d0 + i], a[i] = 1.0, 1.0
            rows.append(a), senses.append(">="), rhs.append(prev[i])
        a = np.zeros(n)
        a[d0:] = 1.0
        rows.append(a), senses.append("<="), rhs.append(cfg.turnover_cap)
    lb = np.zeros(n)
    lb[I] = -np.inf
    names = (
        [f"theta_{i}" for i in range(I)] + ["nu"] + [f"u_{s}" for s in range(S)]
        + ([f"d_{i}" for i in range(I)] if turn else [])
    )
    return LpProblem(c, np.array(rows), tuple(senses), np.array(rhs), lb, np.full(n, np.inf), tuple(names))


def build_dual_lp(scen: ScenarioMatrix, cfg: OptConfig) -> LpProblem:
    """LP dual of :func:`build_lp`, written as a minimization.

    Variables ``y0`` (free, budget), ``p_s in [0, (1-alpha)/(S(1-beta))]``
    and, with turnover, ``q, w >= 0`` (the two absolute-value rows) and
    ``z >= 0`` (the cap).  Row order: one per asset, the ``nu`` row, then one
    per turnover slack.  The row duals of this problem are minus the primal
    ``theta``, ``nu`` and ``d``.
    """
    _check(scen, cfg)
    R = scen.returns
    S, I = R.shape
    turn = cfg.has_turnover
    n = 1 + S + (2 * I + 1 if turn else 0)
    m = I + 1 + (I if turn else 0)
    A = np.zeros((m, n))
    c = np.zeros(n)
    b = np.zeros(m)
    c[0] = -1.0
    A[:I, 0] = 1.0
    A[:I, 1 : 1 + S] = R.T
    b[:I] = -cfg.alpha * scen.mean
    A[I, 1 : 1 + S] = 1.0
    b[I] = 1.0 - cfg.alpha
    senses = ["<="] * I + ["="]
    lb = np.zeros(n)
    lb[0] = -np.inf
    ub = np.full(n, np.inf)
    ub[1 : 1 + S] = _tail_coef(S, cfg)
    names = ["y0"] + [f"p_{s}" for s in range(S)]
    if turn:
        prev = cfg.prev_weights
        q0, w0, z = 1 + S, 1 + S + I, 1 + S + 2 * I
        idx = np.arange(I)
        A[idx, q0 + idx] = -1.0
        A[idx, w0 + idx] = 1.0
        A[I + 1 + idx, q0 + idx] = 1.0
        A[I + 1 + idx, w0 + idx] = 1.0
        A[I + 1 + idx, z] = -1.0
        c[q0 : q0 + I] = prev
        c[w0 : w0 + I] = -prev
        c[z] = cfg.turnover_cap
        senses += ["<="] * I
        names += [f"q_{i}" for i in range(I)] + [f"w_{i}" for i in range(I)] + ["z"]
    return LpProblem(c, A, tuple(senses), b, lb, ub, tuple(names))


def cvar_and_var(scen_returns, weights, beta: float) -> tuple[float, float]:
    """Exact ``min_nu nu + sum (L_s - nu)^+ / (S (1 - beta))`` with its minimizer.

    ``L_s`` are the portfolio losses.  The objective is piecewise linear and
    convex in ``nu`` with kinks at the losses, so the minimum is attained at
    one of them.
    """
    R = np.atleast_2d(np.asarray(scen_returns, dtype=float))
    losses = -(R @ np.asarray(weights, dtype=float))
    L = np.sort(losses)[::-1]
    S = L.size
    k = 1.0 / (S * (1.0 - beta))
    # f(L_(j)) = L_(j) + k * sum_{i<j} (L_(i) - L_(j))
    csum = np.concatenate([[0.0], np.cumsum(L)[:-1]])
    j = np.arange(S)
    f = L + k * (csum - j * L)
    best = int(np.argmin(f))
    return float(f[best]), float(L[best])


def cvar_of_weights(scenarios, weights, beta: float) -> float:
    R = scenarios.returns if isinstance(scenarios, ScenarioMatrix) else scenarios
    return cvar_and_var(R, weights, beta)[0]


def _objective(scen: ScenarioMatrix, cfg: OptConfig, theta) -> tuple[float, float, float, float]:
    cvar, nu = cvar_and_var(scen.returns, theta, cfg.beta)
    er = float(scen.mean @ theta)
    return -cfg.alpha * er + (1.0 - cfg.alpha) * cvar, er, cvar, nu


def _clean_weights(theta: np.ndarray, tol: float) -> np.ndarray:
    if np.any(theta < -100 * tol):
        raise NumericalFailureError("recovered weights violate non-negativity")
    theta = np.clip(theta, 0.0, None)
    return theta / theta.sum()


def optimize_portfolio(
    scen: ScenarioMatrix,
    cfg: OptConfig,
    solver: LpSolver | None = None,
    method: str = "dual",
) -> OptResult:
    """Solve the mean-CVaR program.

    ``method="dual"`` (default) solves :func:`build_dual_lp` and recovers the
    weights from its row duals; ``method="primal"`` solves :func:`build_lp`
    directly.  ``solver`` is any callable with the :func:`solve_lp` contract.
    """
    solver = solver or (lambda p: solve_lp(p, tol=min(cfg.lp_tol, 1e-9)))
    I = scen.n_assets
    if method == "primal":
        sol: LpSolution = solver(build_lp(scen, cfg))
        theta = sol.x[:I]
        lp_obj = sol.objective
    elif method == "dual":
        sol = solver(build_dual_lp(scen, cfg))
        theta = -sol.duals[:I]
        lp_obj = -sol.objective
    else:
        raise ValueError("method must be 'dual' or 'primal'")
    theta = _clean_weights(np.asarray(theta, dtype=float), cfg.lp_tol)
    obj, er, cvar, nu = _objective(scen, cfg, theta)
    gap = abs(obj - lp_obj)
    if gap > 1e3 * cfg.lp_tol * max(1.0, abs(lp_obj)):
        raise NumericalFailureError(f"recovered weights miss the LP optimum by {gap:.3g}")
    info = {"lp_objective": lp_obj, "iterations": sol.iterations, "method": method}
    if cfg.has_turnover:
        info["turnover"] = float(np.abs(theta - cfg.prev_weights).sum())
    return OptResult(theta, nu, obj, er, cvar, sol.status, info)
