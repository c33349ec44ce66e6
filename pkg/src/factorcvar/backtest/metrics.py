"""Performance statistics of a daily return series and a value path."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

TRADING_DAYS = 252
MIN_RATIO_OBS = 30


def describe(x) -> dict:
    """Mean, median, sample std, skewness, excess kurtosis and standard semi-deviation."""
    x = np.asarray(x, dtype=float).ravel()
    m = float(x.mean())
    const = np.ptp(x) == 0
    return {
        "mean": m,
        "median": float(np.median(x)),
        "std": float(x.std(ddof=1)) if x.size > 1 else float("nan"),
        "skew": 0.0 if const else float(stats.skew(x)),
        "exkurt": 0.0 if const else float(stats.kurtosis(x)),
        "sdev": float(np.sqrt(np.mean(np.minimum(x - m, 0.0) ** 2))),
    }


def tail_is_empty(n: int, beta: float) -> bool:
    return n * (1.0 - beta) < 1.0 - 1e-9


def _tail_mean(sorted_x: np.ndarray, mass: float) -> float:
    """Average of the first ``mass`` observations, the last one counted fractionally."""
    whole = int(math.floor(mass + 1e-9))
    frac = mass - whole
    total = float(np.sum(sorted_x[:whole]))
    if frac > 1e-9 and whole < sorted_x.size:
        total += frac * sorted_x[whole]
    return total / mass


def cvar_empirical(x, beta: float) -> tuple[float, float]:
    """Lower and upper tail means of a sample, each tail holding mass ``1 - beta``.

    Each observation carries probability ``1/n``; when ``n (1 - beta)`` is not
    an integer the boundary observation enters with its fractional share.
    Returns ``(nan, nan)`` when the sample is too short for a full observation
    in the tail.
    """
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    if n == 0 or tail_is_empty(n, beta):
        return float("nan"), float("nan")
    mass = n * (1.0 - beta)
    if abs(mass - round(mass)) < 1e-9:
        mass = float(round(mass))
    return _tail_mean(x, mass), _tail_mean(x[::-1], mass)


def max_drawdown(values) -> float:
    """Largest peak-to-trough decline in percent."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    if np.any(v <= 0):
        raise ValueError("values must be positive")
    peak = np.maximum.accumulate(v)
    return float(np.max((peak - v) / peak) * 100.0)


def gini_mean_difference(x) -> float:
    """``2 / (n (n - 1)) * sum_{i<j} |x_i - x_j|`` via the sorted-sample identity."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    if n < 2:
        return float("nan")
    i = np.arange(1, n + 1)
    return float(2.0 * np.sum((2 * i - n - 1) * x) / (n * (n - 1)))


@dataclass(frozen=True)
class Ratios:
    ir: float
    sortino: float
    starr: float
    rachev: float
    gini: float
    undefined: tuple = ()


def rr_ratios(x, beta_rachev: float = 0.95, min_obs: int = MIN_RATIO_OBS) -> Ratios:
    """Reward-to-risk ratios; any ratio with a zero denominator is NaN and listed in ``undefined``."""
    x = np.asarray(x, dtype=float).ravel()
    names = ("ir", "sortino", "starr", "rachev", "gini")
    if x.size < min_obs:
        return Ratios(*([float("nan")] * 5), undefined=names)
    m = float(x.mean())
    lo, up = cvar_empirical(x, beta_rachev)
    denoms = {
        "ir": float(x.std(ddof=1)),
        "sortino": float(np.sqrt(np.mean(np.minimum(x, 0.0) ** 2))),
        "starr": abs(lo),
        "rachev": abs(lo),
        "gini": gini_mean_difference(x),
    }
    numer = {"ir": m, "sortino": m, "starr": m, "rachev": up, "gini": m}
    out, bad = {}, []
    for k in names:
        d = denoms[k]
        if not np.isfinite(d) or d <= 0.0:
            out[k] = float("nan")
            bad.append(k)
        else:
            out[k] = numer[k] / d
    return Ratios(**out, undefined=tuple(bad))


def apply_costs(prev_weights, new_weights, value: float, cost_rate: float) -> tuple[float, float]:
    """Proportional cost on traded notional: ``value * rate * sum |new - prev|``."""
    traded = float(np.sum(np.abs(np.asarray(new_weights, float) - np.asarray(prev_weights, float))))
    cost = value * cost_rate * traded
    return cost, value - cost


@dataclass(frozen=True)
class MetricsReport:
    """Summary of one strategy.  Returns, CVaRs, drawdown and AvgT are in percent."""

    total_return: float
    annual_return: float
    avg_turnover: float
    cvar_l95: float
    cvar_u95: float
    cvar_l99: float
    cvar_u99: float
    max_drawdown: float
    mean: float
    median: float
    std: float
    skew: float
    exkurt: float
    sdev: float
    ir: float
    sortino: float
    starr: float
    rachev: float
    gini: float
    undefined: tuple = field(default=())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["undefined"] = ";".join(self.undefined)
        return d


def average_turnover(turnover) -> float:
    """Mean of per-rebalance turnover excluding the first (inception) trade, in percent."""
    t = np.asarray(turnover, dtype=float).ravel()
    return float(np.mean(t[1:]) * 100.0) if t.size > 1 else 0.0


def compute_metrics(net_returns, values, turnover, initial_value: float = 1.0) -> MetricsReport:
    r = np.asarray(net_returns, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    days = r.size
    growth = v[-1] / initial_value if days else 1.0
    d = describe(r) if days else dict.fromkeys(("mean", "median", "std", "skew", "exkurt", "sdev"), float("nan"))
    l95, u95 = cvar_empirical(r, 0.95)
    l99, u99 = cvar_empirical(r, 0.99)
    ratios = rr_ratios(r)
    undefined = list(ratios.undefined)
    for name, val in (("cvar_95", l95), ("cvar_99", l99)):
        if not np.isfinite(val):
            undefined.append(name)
    return MetricsReport(
        total_return=(growth - 1.0) * 100.0,
        annual_return=(growth ** (TRADING_DAYS / days) - 1.0) * 100.0 if days else 0.0,
        avg_turnover=average_turnover(turnover),
        cvar_l95=l95 * 100.0,
        cvar_u95=u95 * 100.0,
        cvar_l99=l99 * 100.0,
        cvar_u99=u99 * 100.0,
        max_drawdown=max_drawdown(np.concatenate([[initial_value], v])),
        mean=d["mean"] * 100.0,
        median=d["median"] * 100.0,
        std=d["std"] * 100.0,
        skew=d["skew"],
        exkurt=d["exkurt"],
        sdev=d["sdev"] * 100.0,
        ir=ratios.ir,
        sortino=ratios.sortino,
        starr=ratios.starr,
        rachev=ratios.rachev,
        gini=ratios.gini,
        undefined=tuple(undefined),
    )
