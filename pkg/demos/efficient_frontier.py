"""Trace the mean-CVaR trade-off on a fixed scenario set.

Each alpha weighs expected return against 95% CVaR.  Both columns rise
with alpha while the portfolio concentrates in the high-drift asset.

Run:  python3 demos/efficient_frontier.py
"""

import numpy as np

from factorcvar.cvaropt import OptConfig, ScenarioMatrix, optimize_portfolio

rng = np.random.default_rng(3)
drift = np.array([0.0012, 0.0006, 0.0002, 0.0])
vol = np.array([0.025, 0.015, 0.008, 0.004])
scen = ScenarioMatrix(rng.normal(drift, vol, size=(1000, 4)), ("A", "B", "C", "D"))

print(" alpha   E[r] %   CVaR95 %   weights")
for alpha in np.linspace(0.0, 1.0, 11):
    res = optimize_portfolio(scen, OptConfig(alpha, 0.95))
    w = " ".join(f"{v:5.2f}" for v in res.weights)
    print(f"  {alpha:4.2f}  {100 * res.expected_return:7.4f}  {100 * res.cvar:8.4f}   {w}")
