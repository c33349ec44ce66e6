"""Rolling-window backtest: fit, simulate, optimize and book one date at a time.

For out-of-sample row ``t`` only rows ``t - window .. t - 1`` of the data are
used to build the portfolio; row ``t`` supplies the realized return that is
booked on the ledger.  Nothing at or after ``t`` influences the decision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np
import pandas as pd

from ..cvaropt import OptConfig, ScenarioMatrix, optimize_portfolio
from ..data import FactorPanel, PricePanel, ReturnPanel, RollingWindow, compute_log_returns, make_window
from ..errors import BacktestStepError, ConfigError, FactorCvarError, InvalidConfigError
from ..factors import FACTOR_MODELS, RobustConfig, diagnostics, fit_factor_model, pvalue_flags
from ..nig import NigParams, fit_nig_em, sample_nig
from ..timeseries import ArmaGarchFit, all_specs, forecast_one_step, select_model_bic
from .metrics import apply_costs
from .pca import eigen_shares, n_components_for

log = logging.getLogger("factorcvar.backtest")

ALPHA_GRID = (0.0, 0.25, 0.5, 0.75, 0.85, 0.9, 0.95, 0.98)


@dataclass(frozen=True)
class BacktestConfig:
    window: int = 765
    n_scenarios: int = 10000
    beta: float = 0.99
    alphas: tuple = ALPHA_GRID
    cost_rate: float = 0.0002
    turnover_cap: float | None = 0.05
    factor_model: str = "gam"
    seed: int = 0
    max_arma: int = 2
    max_garch: int = 2
    n_starts: int = 5
    robust_loss: str = "huber"
    lp_tol: float = 1e-9
    start: int | None = None
    n_days: int | None = None
    initial_value: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in np.atleast_1d(self.alphas)))
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> dict:
        p = {}
        if self.window < 10:
            p["window"] = "must be at least 10"
        if self.n_scenarios < 1:
            p["n_scenarios"] = "must be positive"
        if not 0.0 < self.beta < 1.0:
            p["beta"] = "must lie in (0, 1)"
        if not self.alphas or any(not 0.0 <= a <= 1.0 for a in self.alphas):
            p["alphas"] = "need a non-empty grid inside [0, 1]"
        if len(set(self.alphas)) != len(self.alphas):
            p["alphas"] = "grid values must be distinct"
        if self.cost_rate < 0:
            p["cost_rate"] = "must be non-negative"
        if self.turnover_cap is not None and self.turnover_cap < 0:
            p["turnover_cap"] = "must be non-negative"
        if self.factor_model not in FACTOR_MODELS:
            p["factor_model"] = f"must be one of {FACTOR_MODELS}"
        if not 0 <= self.max_arma <= 2 or not 0 <= self.max_garch <= 2:
            p["max_order"] = "ARMA and GARCH orders are limited to 0..2"
        if self.n_starts < 1:
            p["n_starts"] = "must be positive"
        if self.robust_loss not in ("huber", "tukey"):
            p["robust_loss"] = "must be huber or tukey"
        if self.start is not None and self.start < self.window:
            p["start"] = "must be >= window"
        if self.n_days is not None and self.n_days < 1:
            p["n_days"] = "must be positive"
        if self.initial_value <= 0:
            p["initial_value"] = "must be positive"
        return p

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


# --------------------------------------------------------------------------
# ledger
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BacktestLedger:
    """One strategy's daily book.

    Row ``k`` holds the target weights before and after the rebalance, the
    gross simple return of the new weights over the day, the trading cost, the
    net return and the closing value, with
    ``value[k] = value[k-1] * (1 + gross[k]) - cost[k]``.
    """

    label: str
    alpha: float
    tickers: tuple
    dates: np.ndarray
    weights_before: np.ndarray
    weights_after: np.ndarray
    gross: np.ndarray
    cost: np.ndarray
    net: np.ndarray
    value: np.ndarray
    turnover: np.ndarray
    initial_value: float = 1.0

    def __len__(self) -> int:
        return len(self.dates)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(
            {
                "date": pd.to_datetime(self.dates).strftime("%Y-%m-%d"),
                "strategy": self.label,
                "alpha": self.alpha,
                "gross": self.gross,
                "cost": self.cost,
                "net": self.net,
                "value": self.value,
                "turnover": self.turnover,
                "initial_value": self.initial_value,
            }
        )
        for j, tk in enumerate(self.tickers):
            df[f"w_before_{tk}"] = self.weights_before[:, j]
        for j, tk in enumerate(self.tickers):
            df[f"w_after_{tk}"] = self.weights_after[:, j]
        return df

    @classmethod
    def from_frame(cls, df: pd.DataFrame, initial_value: float | None = None) -> "BacktestLedger":
        if initial_value is None:
            if "initial_value" in df.columns and len(df):
                initial_value = float(df["initial_value"].iloc[0])
            elif len(df):
                initial_value = float(df["value"].iloc[0] / (1.0 + df["net"].iloc[0]))
            else:
                initial_value = 1.0
        tickers = tuple(c[len("w_after_"):] for c in df.columns if c.startswith("w_after_"))
        label = str(df["strategy"].iloc[0]) if len(df) else ""
        alpha = float(df["alpha"].iloc[0]) if len(df) else float("nan")
        return cls(
            label=label,
            alpha=alpha,
            tickers=tickers,
            dates=pd.to_datetime(df["date"]).to_numpy().astype("datetime64[D]"),
            weights_before=df[[f"w_before_{t}" for t in tickers]].to_numpy(float),
            weights_after=df[[f"w_after_{t}" for t in tickers]].to_numpy(float),
            gross=df["gross"].to_numpy(float),
            cost=df["cost"].to_numpy(float),
            net=df["net"].to_numpy(float),
            value=df["value"].to_numpy(float),
            turnover=df["turnover"].to_numpy(float),
            initial_value=initial_value,
        )

    def equals(self, other: "BacktestLedger", rows: slice | None = None) -> bool:
        """Bit-for-bit equality of every numeric column (optionally on a row slice)."""
        rows = rows or slice(None)
        names = ("weights_before", "weights_after", "gross", "cost", "net", "value", "turnover")
        if not np.array_equal(self.dates[rows], other.dates[rows]):
            return False
        return all(np.array_equal(getattr(self, n)[rows], getattr(other, n)[rows]) for n in names)


class _LedgerBuilder:
    def __init__(self, label, alpha, tickers, initial_value):
        self.label, self.alpha, self.tickers = label, alpha, tuple(tickers)
        self.initial_value = initial_value
        self.value = initial_value
        self.rows = []

    def book(self, date, before, after, simple_returns, cost_rate):
        cost, _ = apply_costs(before, after, self.value, cost_rate)
        gross = float(after @ simple_returns)
        prev = self.value
        self.value = prev * (1.0 + gross) - cost
        net = self.value / prev - 1.0
        turn = float(np.sum(np.abs(after - before)))
        self.rows.append((date, before.copy(), after.copy(), gross, cost, net, self.value, turn))

    def build(self) -> BacktestLedger:
        I = len(self.tickers)
        cols = list(zip(*self.rows)) if self.rows else [[]] * 8
        mat = lambda c: np.array(c, dtype=float).reshape(-1, I)  # noqa: E731
        vec = lambda c: np.array(c, dtype=float)  # noqa: E731
        return BacktestLedger(
            self.label, self.alpha, self.tickers, np.array(cols[0], dtype="datetime64[D]"),
            mat(cols[1]), mat(cols[2]), vec(cols[3]), vec(cols[4]), vec(cols[5]), vec(cols[6]),
            vec(cols[7]), self.initial_value,
        )


# --------------------------------------------------------------------------
# per-window modelling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowModel:
    """Everything estimated on one rolling window.

    ``residuals`` row ``k`` is innovation ``k + 1`` minus the factor-model
    prediction from factor row ``k`` (factors lead innovations by one day);
    ``predicted`` is the prediction for the day after the window.
    """

    arma: tuple
    innovations: np.ndarray
    factor_fits: tuple
    residuals: np.ndarray
    predicted: np.ndarray
    nig: NigParams | None = None


def arma_seed(seed: int, t: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, t, i]).generate_state(1)[0])


def fit_window(window: RollingWindow, cfg: BacktestConfig, fit_nig: bool = True) -> WindowModel:
    """Steps up to the residual distribution for one window (raises ``BacktestStepError``)."""
    R = window.return_slice
    T, I = R.shape
    date = window.anchor_date
    specs = all_specs(cfg.max_arma, cfg.max_garch)
    fits: list[ArmaGarchFit] = []
    try:
        for i in range(I):
            fits.append(
                select_model_bic(R[:, i], specs, n_starts=cfg.n_starts, seed=arma_seed(cfg.seed, window.anchor, i))
            )
    except FactorCvarError as exc:
        raise BacktestStepError("arma-garch", date, exc) from exc
    H = np.column_stack([f.h for f in fits])
    ffits, resid, pred = [], np.empty((T - 1, I)), np.empty(I)
    try:
        for i, tk in enumerate(window.tickers):
            if cfg.factor_model == "none":
                fit = fit_factor_model("none", H[1:, i])
                pred[i] = 0.0
            else:
                F = np.asarray(window.factor_slices[tk].values)
                fit = fit_factor_model(cfg.factor_model, H[1:, i], F[:-1], robust=RobustConfig(cfg.robust_loss))
                pred[i] = float(fit.predict(F[-1]))
            ffits.append(fit)
            resid[:, i] = fit.residuals
    except FactorCvarError as exc:
        raise BacktestStepError("factor-model", date, exc) from exc
    nig = None
    if fit_nig:
        try:
            nig, _ = fit_nig_em(resid)
        except FactorCvarError as exc:
            raise BacktestStepError("nig", date, exc) from exc
    return WindowModel(tuple(fits), H, tuple(ffits), resid, pred, nig)


def simulate_scenarios(model: WindowModel, n: int, seed) -> np.ndarray:
    """``n x I`` one-step log-return scenarios from a fitted window."""
    xi = sample_nig(model.nig, n, seed)
    h = xi + model.predicted
    return np.column_stack([forecast_one_step(f, h[:, i]) for i, f in enumerate(model.arma)])


def scenario_seed(seed: int, t: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, t])


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


@dataclass
class BacktestRun:
    config: BacktestConfig
    ledgers: dict
    diagnostics: pd.DataFrame
    pca: pd.DataFrame
    benchmark: BacktestLedger | None = None
    info: dict = field(default_factory=dict)

    @property
    def ledger(self) -> BacktestLedger:
        if len(self.ledgers) != 1:
            raise ValueError("several strategies in this run; index .ledgers by alpha")
        return next(iter(self.ledgers.values()))


def _as_returns(data) -> ReturnPanel:
    if isinstance(data, ReturnPanel):
        return data
    if isinstance(data, PricePanel):
        return compute_log_returns(data)
    raise TypeError("expected a PricePanel or ReturnPanel")


def _date_range(n_rows: int, cfg: BacktestConfig) -> range:
    start = cfg.window if cfg.start is None else cfg.start
    stop = n_rows if cfg.n_days is None else min(n_rows, start + cfg.n_days)
    if stop <= start:
        raise InvalidConfigError(f"no out-of-sample rows: need more than {start} return rows, have {n_rows}")
    return range(start, stop)


def strategy_label(factor_model: str, alpha: float) -> str:
    return f"{factor_model}, alpha={alpha:.2f}"


def run_backtest(data, factors: dict[str, FactorPanel] | None, cfg: BacktestConfig,
                 benchmark: bool = True) -> BacktestRun:
    """Run every strategy of ``cfg.alphas`` over the out-of-sample rows.

    ``data`` is a price or log-return panel; ``factors`` maps each ticker to a
    raw factor panel aligned with the return dates (unused when
    ``cfg.factor_model == "none"``).  A failure on any date aborts the run
    with a :class:`BacktestStepError` naming the stage and the date.
    """
    returns = _as_returns(data)
    tickers = returns.tickers
    if cfg.factor_model != "none":
        missing = [tk for tk in tickers if not factors or tk not in factors]
        if missing:
            raise InvalidConfigError(f"factor panels missing for {missing}")
    else:
        factors = None
    dates = _date_range(len(returns), cfg)
    I = len(tickers)
    builders = {a: _LedgerBuilder(strategy_label(cfg.factor_model, a), a, tickers, cfg.initial_value)
                for a in cfg.alphas}
    prev = {a: None for a in cfg.alphas}
    diag_rows, pca_rows = [], []
    k_fixed = None
    simple = np.expm1(np.asarray(returns.returns))
    for t in dates:
        date = returns.dates[t]
        window = make_window(returns, factors, t, cfg.window)
        model = fit_window(window, cfg)
        try:
            scen_log = simulate_scenarios(model, cfg.n_scenarios, scenario_seed(cfg.seed, t))
        except FactorCvarError as exc:
            raise BacktestStepError("scenarios", date, exc) from exc
        scen = ScenarioMatrix.from_log_returns(scen_log, tickers)
        for a in cfg.alphas:
            before = np.zeros(I) if prev[a] is None else prev[a]
            ocfg = OptConfig(a, cfg.beta, prev[a], cfg.turnover_cap if prev[a] is not None else None, cfg.lp_tol)
            try:
                res = optimize_portfolio(scen, ocfg)
            except FactorCvarError as exc:
                raise BacktestStepError("optimize", date, exc) from exc
            builders[a].book(date, before, res.weights, simple[t], cfg.cost_rate)
            prev[a] = res.weights
        for i, tk in enumerate(tickers):
            F = None if factors is None else np.asarray(window.factor_slices[tk].values)[:-1]
            dg = diagnostics(model.factor_fits[i], model.innovations[1:, i], F)
            s = model.arma[i].spec
            diag_rows.append({
                "date": str(date), "ticker": tk, "model": cfg.factor_model,
                "p": s.p, "q": s.q, "P": s.P, "Q": s.Q, "arma_garch_bic": model.arma[i].bic,
                "adj_r2": dg.adj_r2, "mae": dg.mae, "bic": dg.bic, "edf": dg.edf,
                "significant": pvalue_flags(model.factor_fits[i]),
            })
        if k_fixed is None:
            k_fixed = n_components_for(eigen_shares(window.return_slice))
        pca_rows.append({
            "date": str(date), "k": k_fixed,
            "returns": float(np.sum(eigen_shares(window.return_slice)[:k_fixed])),
            "innovations": float(np.sum(eigen_shares(model.innovations)[:k_fixed])),
            "residuals": float(np.sum(eigen_shares(model.residuals)[:k_fixed])),
        })
        log.info("%s done (%d/%d)", date, t - dates.start + 1, len(dates))
    bench = ewbh_benchmark(returns, cfg.cost_rate, dates.start, len(dates), cfg.initial_value) if benchmark else None
    return BacktestRun(
        cfg,
        {a: b.build() for a, b in builders.items()},
        pd.DataFrame(diag_rows),
        pd.DataFrame(pca_rows),
        bench,
    )


def ewbh_benchmark(returns, cost_rate: float = 0.0002, start: int = 0, n_days: int | None = None,
                   initial_value: float = 1.0) -> BacktestLedger:
    """Equal weights bought on the first day and left to drift, entry cost paid once."""
    returns = _as_returns(returns)
    simple = np.expm1(np.asarray(returns.returns))
    stop = len(returns) if n_days is None else min(len(returns), start + n_days)
    I = len(returns.tickers)
    b = _LedgerBuilder("EWBH", float("nan"), returns.tickers, initial_value)
    w = np.full(I, 1.0 / I)
    before = np.zeros(I)
    for t in range(start, stop):
        b.book(returns.dates[t], before, w, simple[t], cost_rate)
        grown = w * (1.0 + simple[t])
        w = grown / grown.sum()
        before = w
    return b.build()
