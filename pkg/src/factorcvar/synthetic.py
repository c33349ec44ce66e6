"""Synthetic markets with a known factor structure, for tests and demos.

Every asset has three factors observed at the close: a market state shared by
all assets, an asset-specific state and an irrelevant noise series.  The
standardized innovation of day ``t`` is

    h_t = g(u0_{t-1}, u1_{t-1}) + xi_t,
    g(a, b) = amp * (sin(2 pi a) + 4 (b - 1/2)^2 - 1/3),

where ``u`` are the factor states mapped to [0, 1] and ``xi`` is a correlated
NIG vector scaled so that ``h`` has unit variance.  Returns follow an
ARMA(1,0)-GARCH(1,1) recursion driven by ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from .data import FactorPanel, PricePanel
from .nig import NigParams, sample_nig
from .timeseries import simulate_arma_garch

FACTOR_NAMES = ("market", "own", "noise")
_SIGNAL_VAR = 0.5 + 16.0 * (1.0 / 80.0 - 1.0 / 144.0)


def nonlinear_signal(a, b, amp: float = 0.8):
    """Centered nonlinear response; variance ``amp^2 * 0.589`` for uniform inputs."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return amp * (np.sin(2.0 * np.pi * a) + 4.0 * (b - 0.5) ** 2 - 1.0 / 3.0)


@dataclass(frozen=True)
class SyntheticMarket:
    prices: PricePanel
    factors: dict
    innovations: np.ndarray
    signal: np.ndarray
    states: np.ndarray
    drifts: np.ndarray


def _ar1_uniform(rng, n, rho, shape=()):
    z = np.empty((n,) + shape)
    z[0] = rng.standard_normal(shape)
    s = np.sqrt(1.0 - rho * rho)
    for t in range(1, n):
        z[t] = rho * z[t - 1] + s * rng.standard_normal(shape)
    return stats.norm.cdf(z)


def make_market(
    n_days: int,
    n_assets: int = 3,
    seed: int = 0,
    amp: float = 0.8,
    drifts=None,
    corr: float = 0.3,
    rho: float = 0.5,
    burn: int = 200,
    start_date: str = "2015-01-02",
) -> SyntheticMarket:
    """Simulate ``n_days`` returns (``n_days + 1`` prices) for ``n_assets`` assets.

    ``drifts`` sets each asset's ARMA intercept; by default the first asset
    drifts five times faster than the others, giving it the best Sharpe ratio.
    """
    rng = np.random.default_rng(seed)
    I = n_assets
    total = n_days + burn
    if drifts is None:
        drifts = np.r_[1e-3, np.full(I - 1, 2e-4)]
    drifts = np.asarray(drifts, dtype=float)
    market = _ar1_uniform(rng, total, rho)
    own = _ar1_uniform(rng, total, rho, (I,))
    noise = rng.random((total, I))
    g = np.zeros((total, I))
    g[1:] = nonlinear_signal(market[:-1, None], own[:-1], amp)
    resid_var = max(1.0 - amp * amp * _SIGNAL_VAR, 0.05)
    C = np.full((I, I), corr) + (1.0 - corr) * np.eye(I)
    xi = sample_nig(NigParams(2.0, np.zeros(I), np.zeros(I), resid_var * C), total, rng)
    h = g + xi
    R = np.column_stack([
        simulate_arma_garch(n_days, drifts[i], [0.05], [], 5e-6, [0.85], [0.10], rng, burn=burn,
                            innovations=h[:, i])
        for i in range(I)
    ])
    dates = pd.bdate_range(start_date, periods=n_days + 1).to_numpy().astype("datetime64[D]")
    prices = 100.0 * np.exp(np.vstack([np.zeros(I), np.cumsum(R, axis=0)]))
    tickers = tuple(f"S{i + 1}" for i in range(I))
    keep = slice(burn, total)
    factors = {}
    for i, tk in enumerate(tickers):
        vals = np.column_stack([100.0 * market[keep], 100.0 * own[keep, i], 100.0 * noise[keep, i]])
        factors[tk] = FactorPanel(dates[1:], FACTOR_NAMES, vals)
    states = np.stack([np.repeat(market[keep, None], I, axis=1), own[keep]], axis=-1)
    return SyntheticMarket(
        PricePanel(dates, tickers, prices), factors, h[keep], g[keep], states, drifts
    )


FIXTURE = dict(n_days=350, n_assets=3, seed=20240501)
FIXTURE_BACKTEST = dict(
    window=250,
    n_scenarios=2000,
    alphas=(0.5,),
    factor_model="gam",
    max_arma=1,
    max_garch=1,
    n_starts=2,
    n_days=100,
)


def fixture_market() -> SyntheticMarket:
    """The small three-asset market used by the end-to-end tests and demos."""
    return make_market(**FIXTURE)


def write_market(market: SyntheticMarket, directory, seed: int = 7, **backtest) -> Path:
    """Write prices, factor files, a universe manifest and ``config.ini``; returns the config path."""
    from .data import Universe, factors_to_frame, prices_to_frame, write_universe
    from .fileio import atomic_write_csv, atomic_write_text

    d = Path(directory)
    (d / "factors").mkdir(parents=True, exist_ok=True)
    atomic_write_csv(d / "prices.csv", prices_to_frame(market.prices))
    for tk, fp in market.factors.items():
        atomic_write_csv(d / "factors" / f"{tk}.csv", factors_to_frame(fp))
    cats = {"market": "momentum", "own": "fundamental", "noise": "technical"}
    write_universe(d / "universe.ini", Universe(market.prices.tickers, FACTOR_NAMES, cats))
    settings = {**FIXTURE_BACKTEST, **backtest}
    lines = ["[data]", "prices = prices.csv", "universe = universe.ini", "factors = factors", "", "[backtest]"]
    for k, v in settings.items():
        lines.append(f"{k} = {', '.join(map(str, v)) if isinstance(v, tuple) else v}")
    lines += ["", "[run]", "out_dir = out", "log_level = INFO", f"seed = {seed}", ""]
    return atomic_write_text(d / "config.ini", "\n".join(lines))
