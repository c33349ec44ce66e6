"""Price, return and factor panels plus the indicators derived from prices.

Panels are frozen dataclasses wrapping read-only numpy arrays; rows are trading
dates, columns are assets (or factors).  Everything downstream consumes
:class:`RollingWindow` objects built by :func:`make_window`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    InsufficientRowsError,
    MisalignedSeriesError,
    NonPositivePriceError,
    WindowOutOfRangeError,
    WindowTooLongError,
)

FACTOR_CATEGORIES = ("momentum", "fundamental", "technical")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _as_dates(dates) -> np.ndarray:
    return _frozen(np.asarray(dates, dtype="datetime64[D]"), dtype="datetime64[D]")


def _check_increasing(dates: np.ndarray) -> None:
    if len(dates) > 1 and not np.all(dates[1:] > dates[:-1]):
        raise ValueError("dates must be strictly increasing")


@dataclass(frozen=True)
class PricePanel:
    dates: np.ndarray
    tickers: tuple[str, ...]
    prices: np.ndarray
    highs: np.ndarray | None = None
    lows: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "prices", _frozen(self.prices))
        for name in ("highs", "lows"):
            v = getattr(self, name)
            if v is not None:
                v = _frozen(v)
                if v.shape != self.prices.shape:
                    raise MisalignedSeriesError(f"{name} shape {v.shape} != prices {self.prices.shape}")
                object.__setattr__(self, name, v)
        if self.prices.ndim != 2 or self.prices.shape != (len(self.dates), len(self.tickers)):
            raise MisalignedSeriesError("prices must be a dates x tickers matrix")
        _check_increasing(self.dates)
        if not np.all(np.isfinite(self.prices)):
            raise ValueError("prices contain missing cells; drop incomplete rows first")
        if np.any(self.prices <= 0):
            raise NonPositivePriceError("all prices must be > 0")


@dataclass(frozen=True)
class ReturnPanel:
    dates: np.ndarray
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "returns", _frozen(self.returns))
        if self.returns.shape != (len(self.dates), len(self.tickers)):
            raise MisalignedSeriesError("returns must be a dates x tickers matrix")
        _check_increasing(self.dates)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class FactorPanel:
    """Factor values of a single asset.

    ``normalization_bounds`` is ``None`` for raw panels and an array of
    ``(min, max)`` rows once :func:`normalize_factors` has been applied.
    """

    dates: np.ndarray
    factor_names: tuple[str, ...]
    values: np.ndarray
    normalization_bounds: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "dates", _as_dates(self.dates))
        object.__setattr__(self, "factor_names", tuple(self.factor_names))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (len(self.dates), len(self.factor_names)):
            raise MisalignedSeriesError("values must be a dates x factors matrix")
        if self.normalization_bounds is not None:
            object.__setattr__(self, "normalization_bounds", _frozen(self.normalization_bounds))
        _check_increasing(self.dates)

    @property
    def normalized(self) -> bool:
        return self.normalization_bounds is not None

    def take(self, rows) -> "FactorPanel":
        return FactorPanel(self.dates[rows], self.factor_names, self.values[rows], self.normalization_bounds)


@dataclass(frozen=True)
class RollingWindow:
    """Estimation window ending the day before ``anchor``.

    ``factor_slices`` are normalized with bounds local to this window.
    """

    anchor: int
    anchor_date: np.datetime64 | None
    length: int
    dates: np.ndarray
    tickers: tuple[str, ...]
    return_slice: np.ndarray
    factor_slices: dict[str, FactorPanel] = field(default_factory=dict)


# --------------------------------------------------------------------------
# returns and indicators
# --------------------------------------------------------------------------


def compute_log_returns(prices: PricePanel) -> ReturnPanel:
    p = np.asarray(prices.prices, dtype=float)
    if p.shape[0] < 2:
        raise InsufficientRowsError("need at least two price rows")
    if np.any(p <= 0):
        raise NonPositivePriceError("all prices must be > 0")
    lp = np.log(p)
    return ReturnPanel(prices.dates[1:], prices.tickers, lp[1:] - lp[:-1])


def rsi_from_averages(avg_up, avg_down):
    """RSI on the 0-100 scale from average gain and average (absolute) loss."""
    avg_up = np.asarray(avg_up, dtype=float)
    avg_down = np.asarray(avg_down, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 100.0 - 100.0 / (1.0 + avg_up / avg_down)
    out = np.where(avg_down == 0, 100.0, out)
    out = np.where((avg_up == 0) & (avg_down > 0), 0.0, out)
    return out[()] if out.ndim == 0 else out


def compute_rsi(prices, n: int = 14) -> np.ndarray:
    """Relative strength index over rolling windows of ``n`` daily changes.

    Average up (down) is the mean of the positive (absolute negative) changes
    among the ``n`` changes in the window.  Element ``j`` of the output covers
    the changes ending at ``prices[j + n]``; the output has ``len(prices) - n``
    entries.
    """
    x = np.asarray(prices, dtype=float)
    if n < 1 or x.size <= n:
        raise WindowTooLongError(f"series of length {x.size} too short for window {n}")
    d = np.diff(x)
    win = np.lib.stride_tricks.sliding_window_view(d, n)
    up = np.where(win > 0, win, 0.0)
    down = np.where(win < 0, -win, 0.0)
    n_up = (win > 0).sum(axis=1)
    n_down = (win < 0).sum(axis=1)
    avg_up = np.divide(up.sum(axis=1), n_up, out=np.zeros(len(win)), where=n_up > 0)
    avg_down = np.divide(down.sum(axis=1), n_down, out=np.zeros(len(win)), where=n_down > 0)
    return np.asarray(rsi_from_averages(avg_up, avg_down), dtype=float)


def true_range(highs, lows, closes) -> np.ndarray:
    h, l, c = (np.asarray(a, dtype=float) for a in (highs, lows, closes))
    if not (h.shape == l.shape == c.shape) or h.ndim != 1:
        raise MisalignedSeriesError("highs, lows and closes must be aligned 1-D series")
    prev = c[:-1]
    return np.maximum.reduce([h[1:] - l[1:], np.abs(h[1:] - prev), np.abs(l[1:] - prev)])


def compute_atr(highs, lows, closes, n: int = 14) -> np.ndarray:
    """Simple ``n``-day moving average of the true range.

    The first true range needs the previous close, so the output has
    ``len(closes) - n`` entries.
    """
    tr = true_range(highs, lows, closes)
    if n < 1 or tr.size < n:
        raise MisalignedSeriesError(f"series of length {tr.size + 1} too short for ATR window {n}")
    return moving_average(tr, n)


def moving_average(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[n:] - c[:-n]) / n


# --------------------------------------------------------------------------
# normalization and windows
# --------------------------------------------------------------------------


def normalize_factors(panel: FactorPanel) -> FactorPanel:
    """Map each factor column onto [0, 1] using the panel's own min/max.

    Constant columns map to 0.5.
    """
    v = np.asarray(panel.values, dtype=float)
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    return apply_bounds(panel, np.column_stack([lo, hi]))


def apply_bounds(panel: FactorPanel, bounds) -> FactorPanel:
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    v = np.asarray(panel.values, dtype=float)
    const = span <= 0
    out = np.empty_like(v)
    out[:, ~const] = (v[:, ~const] - lo[~const]) / span[~const]
    out[:, const] = 0.5
    return FactorPanel(panel.dates, panel.factor_names, out, bounds)


def make_window(
    returns: ReturnPanel,
    factors: dict[str, FactorPanel] | None,
    t: int,
    length: int,
    normalize: bool = True,
) -> RollingWindow:
    """Slice rows ``t - length`` .. ``t - 1`` of the return and factor panels.

    ``t`` is a row index into ``returns`` and may equal ``len(returns)`` (a
    window for forecasting past the end of the data).  Row ``t`` itself is
    never included.
    """
    n = len(returns)
    if length < 1 or t - length < 0 or t > n:
        raise WindowOutOfRangeError(f"window [{t - length}, {t - 1}] outside rows [0, {n - 1}]")
    rows = slice(t - length, t)
    anchor_date = returns.dates[t] if t < n else None
    slices: dict[str, FactorPanel] = {}
    for tk, fp in (factors or {}).items():
        if len(fp.dates) != n or not np.array_equal(fp.dates, returns.dates):
            raise MisalignedSeriesError(f"factor panel for {tk} is not aligned with returns")
        sub = fp.take(rows)
        slices[tk] = normalize_factors(sub) if normalize else sub
    return RollingWindow(
        anchor=t,
        anchor_date=anchor_date,
        length=length,
        dates=returns.dates[rows],
        tickers=returns.tickers,
        return_slice=np.asarray(returns.returns[rows]),
        factor_slices=slices,
    )


def align_panels(
    prices: PricePanel, factors: dict[str, FactorPanel] | None
) -> tuple[PricePanel, dict[str, FactorPanel]]:
    """Restrict prices and factors to the dates present (and complete) in all of them.

    Factor rows are aligned with the *return* dates, i.e. the price dates minus
    the first one; the first price date is kept as the return base.
    """
    if not factors:
        return prices, {}
    common = set(prices.dates[1:].tolist())
    for tk in prices.tickers:
        if tk not in factors:
            raise MisalignedSeriesError(f"no factor panel for ticker {tk}")
        fp = factors[tk]
        ok = np.all(np.isfinite(fp.values), axis=1)
        common &= set(fp.dates[ok].tolist())
    keep_ret = np.array([d in common for d in prices.dates[1:].tolist()])
    price_rows = np.concatenate([[True], keep_ret])
    pp = PricePanel(
        prices.dates[price_rows],
        prices.tickers,
        prices.prices[price_rows],
        None if prices.highs is None else prices.highs[price_rows],
        None if prices.lows is None else prices.lows[price_rows],
    )
    ret_dates = pp.dates[1:]
    out = {}
    for tk in prices.tickers:
        fp = factors[tk]
        idx = {d: i for i, d in enumerate(fp.dates.tolist())}
        rows = [idx[d] for d in ret_dates.tolist()]
        out[tk] = fp.take(np.asarray(rows, dtype=int))
    return pp, out


# --------------------------------------------------------------------------
# summary statistics
# --------------------------------------------------------------------------


def panel_stats(returns: ReturnPanel, beta: float = 0.99) -> pd.DataFrame:
    """Per-asset mean, median, std, skewness, excess kurtosis and tail CVaRs."""
    from .backtest.metrics import cvar_empirical, describe

    r = np.asarray(returns.returns, dtype=float)
    if r.shape[0] < 2:
        raise InsufficientRowsError("need at least two observations per asset")
    rows = []
    for j, tk in enumerate(returns.tickers):
        d = describe(r[:, j])
        lo, up = cvar_empirical(r[:, j], beta)
        rows.append(
            {
                "ticker": tk,
                "mean": d["mean"],
                "median": d["median"],
                "std": d["std"],
                "skew": d["skew"],
                "exkurt": d["exkurt"],
                "cvar_l": lo,
                "cvar_u": up,
            }
        )
    return pd.DataFrame(rows).set_index("ticker")


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------


def _read_dated_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    if df.columns[0].strip().lower() != "date":
        raise ValueError(f"{path}: first column must be 'date'")
    df = df.rename(columns={df.columns[0]: "date"})
    df["date"] = pd.to_datetime(df["date"], format="ISO8601")
    return df.sort_values("date").reset_index(drop=True)


def read_prices_csv(path, highs_path=None, lows_path=None) -> PricePanel:
    """Read ``date,<ticker1>,...`` close prices; rows with a missing cell are dropped."""
    df = _read_dated_csv(path)
    frames = [df]
    extra = [p for p in (highs_path, lows_path) if p is not None]
    for p in extra:
        frames.append(_read_dated_csv(p))
    tickers = [c for c in df.columns if c != "date"]
    merged = frames[0].set_index("date")[tickers]
    parts = [merged]
    for f in frames[1:]:
        parts.append(f.set_index("date")[tickers])
    joined = pd.concat(parts, axis=1, join="inner").dropna()
    k = len(tickers)
    vals = joined.to_numpy(dtype=float)
    dates = joined.index.values.astype("datetime64[D]")
    highs = vals[:, k : 2 * k] if highs_path is not None else None
    lows = vals[:, -k:] if lows_path is not None else None
    return PricePanel(dates, tickers, vals[:, :k], highs, lows)


def read_factor_csv(path, factor_names=None) -> FactorPanel:
    df = _read_dated_csv(path)
    names = [c for c in df.columns if c != "date"]
    if factor_names is not None:
        missing = [f for f in factor_names if f not in names]
        if missing:
            raise MisalignedSeriesError(f"{path}: missing factor columns {missing}")
        names = list(factor_names)
    df = df.dropna(subset=names)
    return FactorPanel(df["date"].values.astype("datetime64[D]"), names, df[names].to_numpy(dtype=float))


@dataclass(frozen=True)
class Universe:
    tickers: tuple[str, ...]
    factors: tuple[str, ...]
    categories: dict[str, str]

    def factors_in(self, category: str) -> tuple[str, ...]:
        return tuple(f for f in self.factors if self.categories.get(f) == category)


def read_universe(path) -> Universe:
    """Parse a universe manifest.

    Format::

        [universe]
        tickers = AAA, BBB, CCC
        factors = rsi_14, pe_ratio, atr_14

        [categories]
        rsi_14 = momentum
        pe_ratio = fundamental
        atr_14 = technical
    """
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    if "universe" not in cp:
        raise ValueError(f"{path}: missing [universe] section")
    sec = cp["universe"]
    tickers = tuple(t.strip() for t in sec.get("tickers", "").split(",") if t.strip())
    factors = tuple(f.strip() for f in sec.get("factors", "").split(",") if f.strip())
    cats = dict(cp["categories"]) if "categories" in cp else {}
    bad = {f: c for f, c in cats.items() if c not in FACTOR_CATEGORIES}
    if bad:
        raise ValueError(f"{path}: unknown factor categories {bad}")
    if not tickers:
        raise ValueError(f"{path}: empty ticker list")
    return Universe(tickers, factors, cats)


def write_universe(path, universe: Universe) -> None:
    cp = configparser.ConfigParser()
    cp["universe"] = {"tickers": ", ".join(universe.tickers), "factors": ", ".join(universe.factors)}
    if universe.categories:
        cp["categories"] = dict(universe.categories)
    with open(path, "w") as fh:
        cp.write(fh)


def prices_to_frame(panel: PricePanel) -> pd.DataFrame:
    df = pd.DataFrame(np.asarray(panel.prices), columns=list(panel.tickers))
    df.insert(0, "date", pd.to_datetime(panel.dates).strftime("%Y-%m-%d"))
    return df


def factors_to_frame(panel: FactorPanel) -> pd.DataFrame:
    df = pd.DataFrame(np.asarray(panel.values), columns=list(panel.factor_names))
    df.insert(0, "date", pd.to_datetime(panel.dates).strftime("%Y-%m-%d"))
    return df


def load_dataset(prices_path, universe_path=None, factor_dir=None):
    """Load a price CSV, an optional manifest and per-asset factor CSVs.

    Factor files are looked up as ``<factor_dir>/<ticker>.csv``.
    """
    prices = read_prices_csv(prices_path)
    universe = read_universe(universe_path) if universe_path else None
    if universe is not None:
        missing = [t for t in universe.tickers if t not in prices.tickers]
        if missing:
            raise MisalignedSeriesError(f"tickers {missing} not in price file")
        cols = [prices.tickers.index(t) for t in universe.tickers]
        prices = PricePanel(prices.dates, universe.tickers, prices.prices[:, cols])
    factors = {}
    if factor_dir is not None:
        names = universe.factors if universe is not None else None
        for tk in prices.tickers:
            factors[tk] = read_factor_csv(Path(factor_dir) / f"{tk}.csv", names)
        prices, factors = align_panels(prices, factors)
    return prices, factors, universe
