"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest
from scipy import integrate

from oracles import discrete_cvar, gam_oracle, ols, simplex_grid

from factorcvar.backtest import (
    BacktestConfig,
    cvar_empirical,
    eigen_shares,
    fit_window,
    max_drawdown,
    n_components_for,
    rr_ratios,
    run_backtest,
)
from factorcvar.cvaropt import OptConfig, ScenarioMatrix, optimize_portfolio
from factorcvar.data import FactorPanel, PricePanel, compute_log_returns, make_window
from factorcvar.factors import RobustConfig, diagnostics, fit_factor_model, fit_gam, fit_rlr
from factorcvar.nig import NigParams, fit_nig_em, nig_log_density, sample_nig
from factorcvar.timeseries import ArmaGarchSpec, fit_arma_garch, select_model_bic, simulate_arma_garch, standard_errors
from factorcvar.synthetic import FIXTURE_BACKTEST, fixture_market, make_market

FIXTURE_SEED = 20240517


@pytest.fixture(scope="module")
def fixture_run():
    market = fixture_market()
    cfg = BacktestConfig(**FIXTURE_BACKTEST, seed=FIXTURE_SEED)
    t0 = time.perf_counter()
    run = run_backtest(market.prices, market.factors, cfg)
    return market, cfg, run, time.perf_counter() - t0


# 1 -------------------------------------------------------------------------


def test_criterion_01_determinism(fixture_run, verdict):
    market, cfg, first, elapsed1 = fixture_run
    t0 = time.perf_counter()
    second = run_backtest(market.prices, market.factors, cfg)
    elapsed2 = time.perf_counter() - t0
    same = first.ledger.equals(second.ledger) and first.benchmark.equals(second.benchmark)
    same = same and first.ledger.to_frame().equals(second.ledger.to_frame())
    days = len(first.ledger)
    ok = same and days == 100 and max(elapsed1, elapsed2) < 300
    assert verdict(1, "bit-identical ledgers on rerun", ok,
                   f"{days} days, {elapsed1:.0f}s and {elapsed2:.0f}s per run")


# 2 -------------------------------------------------------------------------


def test_criterion_02_arma_garch_recovery(verdict):
    truth = np.array([0.0, 0.5, 1e-5, 0.8, 0.1])  # c1, ar1, c2, garch1, arch1
    inside = np.zeros(truth.size)
    selected = 0
    runs = 20
    for seed in range(runs):
        r = simulate_arma_garch(2000, 0.0, [0.5], [], 1e-5, [0.8], [0.1], rng=1000 + seed)
        fit = fit_arma_garch(r, ArmaGarchSpec(1, 0, 1, 1), seed=seed)
        se = standard_errors(fit)
        inside += np.abs(fit.params - truth) <= 3 * se
        best = select_model_bic(r, n_starts=2, seed=seed).spec
        selected += best.p >= 1 and best.P >= 1 and best.Q >= 1
    rates = inside / runs
    ok = bool(np.all(rates >= 0.8)) and selected / runs >= 0.8
    assert verdict(2, "ARMA-GARCH parameters and BIC orders recovered", ok,
                   f"within 3 s.e. {np.round(rates, 2).tolist()}, orders found {selected}/{runs}")


# 3 -------------------------------------------------------------------------


def test_criterion_03_robust_regression(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(25):
        n, k = int(rng.integers(30, 300)), int(rng.integers(1, 6))
        F = rng.random((n, k))
        h = rng.normal(size=k) @ F.T + rng.standard_t(3, n)
        fit = fit_rlr(h, F, RobustConfig("huber", kappa=1e9))
        ref = ols(h, F)
        worst = max(worst, float(np.max(np.abs(np.r_[fit.intercept, fit.coef] - ref))))
    sigma = 0.001
    n = 200
    F = rng.random((n, 3))
    h = 0.1 + F @ np.array([0.5, -0.3, 0.2]) + sigma * rng.standard_normal(n)
    clean = ols(h, F)
    h_out = h.copy()
    h_out[17] += 100 * sigma
    tukey = fit_rlr(h_out, F, RobustConfig("tukey"))
    gap = float(np.max(np.abs(np.r_[tukey.intercept, tukey.coef] - clean)))
    ok = worst <= 1e-8 and tukey.weights[17] == 0.0 and gap <= 1e-3
    assert verdict(3, "Huber limit equals OLS; Tukey rejects outlier", ok,
                   f"max Huber-OLS gap {worst:.1e}, outlier weight {tukey.weights[17]}, Tukey gap {gap:.1e}")


# 4 -------------------------------------------------------------------------


def test_criterion_04_gam_oracle(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for trial in range(10):
        n, k = int(rng.integers(150, 400)), int(rng.integers(1, 4))
        F = rng.random((n, k))
        h = np.sin(3 * F[:, 0]) + rng.normal(0, 0.3, n)
        lam = 10 ** rng.uniform(-3, 4, k)
        fit = fit_gam(h, F, lambdas=lam)
        _, coefs, fitted = gam_oracle(h, F, lam)
        worst = max(worst, float(np.max(np.abs(fit.fitted - fitted))),
                    max(float(np.max(np.abs(a - b))) for a, b in zip(fit.coefs, coefs)))
    F = rng.random((300, 3))
    h = F @ [1.0, -2.0, 0.5] + np.cos(5 * F[:, 1]) + rng.normal(0, 0.2, 300)
    stiff = fit_gam(h, F, lambdas=[1e12] * 3)
    lin = np.column_stack([np.ones(300), F]) @ ols(h, F)
    lin_gap = float(np.max(np.abs(stiff.fitted - lin)))
    ok = worst <= 1e-8 and lin_gap <= 1e-4
    assert verdict(4, "GAM equals penalized normal equations; stiff limit is OLS", ok,
                   f"oracle gap {worst:.1e}, stiff-vs-OLS gap {lin_gap:.1e}")


# 5 -------------------------------------------------------------------------


def _random_nig(rng, d):
    A = rng.normal(size=(d, d))
    sigma = A @ A.T / d + 0.5 * np.eye(d)
    return NigParams(float(rng.uniform(0.3, 5.0)), rng.normal(0, 0.5, d), rng.normal(0, 0.4, d), sigma)


def test_criterion_05_nig(verdict):
    rng = np.random.default_rng(5)
    notes = []
    # EM monotonicity
    monotone = True
    for i in range(25):
        d = int(rng.integers(1, 5))
        x = sample_nig(_random_nig(rng, d), int(rng.integers(100, 1500)), seed=500 + i)
        _, trace = fit_nig_em(x)
        monotone &= bool(np.all(np.diff(trace.loglik) >= -1e-8))
    notes.append(f"EM monotone {monotone}")
    # 1-D normalization
    worst_mass = 0.0
    for ab, g, s2 in ((0.5, 0.0, 1.0), (1.0, 0.5, 0.3), (4.0, -1.0, 2.0), (20.0, 0.2, 0.5)):
        p = NigParams(ab, np.array([0.3]), np.array([g]), np.array([[s2]]))
        mass, _ = integrate.quad(lambda t: np.exp(nig_log_density([t], p)), -30, 30, limit=400,
                                 epsabs=1e-12, epsrel=1e-12, points=[0.3])
        worst_mass = max(worst_mass, abs(mass - 1))
    notes.append(f"mass error {worst_mass:.1e}")
    # sampler moments
    p = NigParams(1.5, np.array([0.2, -0.1, 0.0]), np.array([0.3, -0.2, 0.1]),
                  np.array([[1.0, 0.3, 0.1], [0.3, 0.7, -0.2], [0.1, -0.2, 1.2]]))
    n = 1_000_000
    x = sample_nig(p, n, seed=55)
    cov_true = p.sigma + np.outer(p.gamma, p.gamma) / p.alpha_bar
    m = x.mean(axis=0)
    z_mean = np.abs(m - (p.mu + p.gamma)) / np.sqrt(np.diag(cov_true) / n)
    dev = x - m
    z_cov = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            prod = dev[:, i] * dev[:, j]
            z_cov[i, j] = abs(prod.mean() - cov_true[i, j]) / (prod.std() / np.sqrt(n))
    sampler_ok = bool(np.all(z_mean <= 3) and np.all(z_cov <= 3))
    notes.append(f"max mean z {z_mean.max():.2f}, max cov z {z_cov.max():.2f}")
    # recovery
    truth = NigParams(1.2, np.array([0.1, -0.2, 0.05]), np.array([0.2, 0.1, -0.15]),
                      np.array([[1.0, 0.4, -0.2], [0.4, 0.8, 0.1], [-0.2, 0.1, 0.6]]))
    fit, _ = fit_nig_em(sample_nig(truth, 20000, seed=77))
    scale = np.sqrt(np.diag(truth.sigma))
    mu_err = float(np.max(np.abs(fit.mu - truth.mu) / scale))
    g_err = float(np.max(np.abs(fit.gamma - truth.gamma) / scale))
    s_err = float(np.linalg.norm(fit.sigma - truth.sigma) / np.linalg.norm(truth.sigma))
    notes.append(f"recovery mu {mu_err:.3f} gamma {g_err:.3f} sigma {s_err:.3f}")
    ok = monotone and worst_mass <= 1e-6 and sampler_ok and mu_err <= 0.05 and g_err <= 0.05 and s_err <= 0.10
    assert verdict(5, "NIG EM, density, sampler and recovery", ok, "; ".join(notes))


# 6 -------------------------------------------------------------------------


def _chunked_grid_min(R, alpha, beta, step):
    # large grids go through in slices to bound memory
    grid = simplex_grid(R.shape[1], step)
    best = np.inf
    for lo in range(0, len(grid), 20000):
        x = grid[lo:lo + 20000] @ R.T
        obj = -alpha * x.mean(axis=1) + (1 - alpha) * discrete_cvar(x, beta)
        best = min(best, float(obj.min()))
    return best


def test_criterion_06_cvar_lp(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    step = 0.01
    optimal = bounded = 0
    for _ in range(50):
        I, S = int(rng.integers(1, 5)), int(rng.integers(20, 201))
        R = rng.normal(rng.uniform(-0.01, 0.01, I), rng.uniform(0.005, 0.04, I), (S, I))
        alpha, beta = float(rng.random()), float(rng.choice([0.9, 0.95, 0.99]))
        res = optimize_portfolio(ScenarioMatrix(R), OptConfig(alpha, beta))
        grid = _chunked_grid_min(R, alpha, beta, step)
        resolution = step * I * float(np.max(np.abs(R)))
        optimal += res.objective <= grid + 1e-6
        bounded += res.objective >= grid - resolution - 1e-6
    monotone = True
    alphas = np.linspace(0.0, 1.0, 21)
    for _ in range(10):
        I, S = int(rng.integers(2, 5)), int(rng.integers(50, 201))
        scen = ScenarioMatrix(rng.normal(rng.uniform(-0.01, 0.01, I), rng.uniform(0.005, 0.04, I), (S, I)))
        out = [optimize_portfolio(scen, OptConfig(a, 0.95)) for a in alphas]
        ret = np.array([o.expected_return for o in out])
        cv = np.array([o.cvar for o in out])
        monotone &= bool(np.all(np.diff(ret) >= 0) and np.all(np.diff(cv) >= 0))
    elapsed = time.perf_counter() - t0
    ok = optimal == 50 and bounded == 50 and monotone and elapsed < 120
    assert verdict(6, "CVaR LP matches grid oracle; frontier monotone", ok,
                   f"optimal {optimal}/50, within bound {bounded}/50, monotone {monotone}, {elapsed:.0f}s")


# 7 -------------------------------------------------------------------------


def test_criterion_07_metric_identities(verdict):
    lo, up = cvar_empirical(np.arange(1, 101), 0.95)
    cvar_ok = lo == 3.0 and up == 98.0
    md_ok = max_drawdown([100, 50, 75]) == 50.0 and max_drawdown([100, 80, 120, 60]) == 50.0
    x = np.random.default_rng(7).normal(0.0005, 0.012, 500)
    r = rr_ratios(x)
    starr_gap = abs(r.starr * abs(cvar_empirical(x, 0.95)[0]) - x.mean())
    sym = np.r_[x - x.mean(), x.mean() - x]
    rachev_gap = abs(rr_ratios(sym).rachev - 1.0)
    ok = cvar_ok and md_ok and starr_gap <= 1e-12 and rachev_gap <= 1e-12
    assert verdict(7, "CVaR, drawdown, STARR and Rachev identities", ok,
                   f"cvar ({lo}, {up}), STARR gap {starr_gap:.1e}, Rachev gap {rachev_gap:.1e}")


# 8 -------------------------------------------------------------------------


def test_criterion_08_gam_beats_rlr(verdict):
    t0 = time.perf_counter()
    market = make_market(500, 1, seed=8)
    returns = compute_log_returns(market.prices)
    T = 250
    gam, rlr = [], []
    for t in range(T, T + 50 * 5, 5):
        win = make_window(returns, market.factors, t, T)
        arma = select_model_bic(win.return_slice[:, 0], [ArmaGarchSpec(p, 0, P, Q) for p in (0, 1)
                                                           for P in (0, 1) for Q in (0, 1)], n_starts=2)
        h = arma.h[1:]
        F = np.asarray(win.factor_slices["S1"].values)[:-1]
        gam.append(diagnostics(fit_factor_model("gam", h, F), h, F).adj_r2)
        rlr.append(diagnostics(fit_factor_model("rlr", h, F), h, F).adj_r2)
    elapsed = time.perf_counter() - t0
    med_g, med_r = float(np.median(gam)), float(np.median(rlr))
    ok = med_g > med_r and elapsed < 600
    assert verdict(8, "GAM median adjusted R^2 above RLR", ok,
                   f"GAM {med_g:.3f} vs RLR {med_r:.3f} over 50 windows, {elapsed:.0f}s")


# 9 -------------------------------------------------------------------------


def test_criterion_09_pca_residual_share(verdict):
    market = make_market(420, 10, seed=9)
    returns = compute_log_returns(market.prices)
    cfg = BacktestConfig(window=250, factor_model="gam", max_arma=1, max_garch=1, n_starts=1, seed=9)
    k = None
    rows = []
    for t in range(250, 250 + 20 * 8, 8):
        win = make_window(returns, market.factors, t, cfg.window)
        model = fit_window(win, cfg, fit_nig=False)
        if k is None:
            k = n_components_for(eigen_shares(win.return_slice))
        rows.append((float(np.sum(eigen_shares(model.innovations)[:k])),
                     float(np.sum(eigen_shares(model.residuals)[:k]))))
    rows = np.array(rows)
    ok = k < 10 and bool(np.all(rows[:, 1] <= rows[:, 0]))
    gap = rows[:, 0] - rows[:, 1]
    assert verdict(9, "residual top-k share never above innovation share", ok,
                   f"k={k}, 20 windows, share gap min {gap.min():.4f} mean {gap.mean():.4f}")


# 10 ------------------------------------------------------------------------


def test_criterion_10_no_look_ahead(fixture_run, verdict):
    market, cfg, base, _ = fixture_run
    returns = compute_log_returns(market.prices)
    start = cfg.window
    cut = start + 60  # first tampered return row
    rng = np.random.default_rng(10)
    prices = np.array(market.prices.prices)
    prices[cut + 1:] *= np.exp(rng.normal(0, 0.05, prices[cut + 1:].shape))
    tampered_prices = PricePanel(market.prices.dates, market.prices.tickers, prices)
    assert np.array_equal(compute_log_returns(tampered_prices).returns[:cut], returns.returns[:cut])
    factors = {}
    for tk, fp in market.factors.items():
        v = np.array(fp.values)
        v[cut:] = rng.random(v[cut:].shape) * 100
        factors[tk] = FactorPanel(fp.dates, fp.factor_names, v)
    other = run_backtest(tampered_prices, factors, cfg)
    keep = slice(0, cut - start)
    same_before = base.ledger.equals(other.ledger, keep) and base.benchmark.equals(other.benchmark, keep)
    changed_after = not base.ledger.equals(other.ledger, slice(cut - start, None))
    ok = same_before and changed_after
    assert verdict(10, "tampering dates >= t leaves earlier ledger rows identical", ok,
                   f"rows < {cut - start} identical: {same_before}; later rows changed: {changed_after}")
