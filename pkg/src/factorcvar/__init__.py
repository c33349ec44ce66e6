"""Factor-enhanced mean-CVaR portfolio construction.

Subpackages and modules:

- ``data``: price/factor panels, log returns, indicators, rolling windows
- ``timeseries``: ARMA-GARCH estimation, BIC selection, one-step forecasts
- ``factors``: robust linear and additive P-spline regressions of innovations
- ``nig``: multivariate normal inverse Gaussian law, EM fit and sampler
- ``cvaropt``: mean-CVaR linear program and the bundled simplex solver
- ``backtest``: rolling engine, cost accounting, metrics and reports
"""

__version__ = "0.1.0"
