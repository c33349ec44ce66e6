import math

import numpy as np
import pytest

from factorcvar.backtest import (
    BacktestConfig,
    apply_costs,
    compute_metrics,
    cvar_empirical,
    eigen_shares,
    ewbh_benchmark,
    gini_mean_difference,
    max_drawdown,
    n_components_for,
    pca_explained_dynamics,
    rr_ratios,
    run_backtest,
)
from factorcvar.data import ReturnPanel
from factorcvar.errors import ConfigError
from factorcvar.synthetic import make_market


def test_apply_costs_examples():
    assert apply_costs([0.5, 0.5], [0.5, 0.5], 100.0, 0.0002) == (0.0, 100.0)
    cost, after = apply_costs([1, 0], [0, 1], 100.0, 0.0002)
    assert cost == pytest.approx(0.04) and after == pytest.approx(99.96)
    assert apply_costs([1, 0], [0, 1], 100.0, 0.0)[1] == 100.0


def test_cvar_empirical_examples():
    assert cvar_empirical(np.arange(1, 101), 0.95) == (3.0, 98.0)
    assert cvar_empirical(np.full(40, 0.7), 0.95) == pytest.approx((0.7, 0.7))
    x = np.random.default_rng(0).normal(size=200)
    sym = np.r_[x, -x]
    lo, up = cvar_empirical(sym, 0.97)
    assert up == pytest.approx(-lo, abs=1e-12)
    assert all(math.isnan(v) for v in cvar_empirical(np.arange(10.0), 0.95))


def test_cvar_fractional_boundary():
    # 30 observations, mass 1.5: the second-worst point enters with weight 0.5
    x = np.arange(30.0)
    lo, up = cvar_empirical(x, 0.95)
    assert lo == pytest.approx((0 + 0.5 * 1) / 1.5)
    assert up == pytest.approx((29 + 0.5 * 28) / 1.5)


def test_max_drawdown_cases():
    assert max_drawdown([1, 2, 3, 4]) == 0.0
    assert max_drawdown([100, 50, 75]) == 50.0
    assert max_drawdown([100, 80, 120, 60]) == 50.0


def test_gini_and_ratios():
    assert gini_mean_difference([-1.0, 1.0]) == 2.0
    x = np.random.default_rng(1).normal(0.001, 0.01, 300)
    pairs = np.abs(x[:, None] - x[None, :]).sum() / (300 * 299)
    assert gini_mean_difference(x) == pytest.approx(pairs, rel=1e-12)
    r = rr_ratios(np.tile([-1.0, 1.0], 20))
    assert r.gini == 0.0 and r.rachev == pytest.approx(1.0, abs=1e-12)
    r = rr_ratios(x)
    lo, up = cvar_empirical(x, 0.95)
    assert r.starr * abs(lo) == pytest.approx(x.mean(), abs=1e-12)
    assert r.rachev == pytest.approx(up / abs(lo), abs=1e-12)
    assert r.ir == pytest.approx(x.mean() / x.std(ddof=1))


def test_sortino_undefined_for_no_downside():
    r = rr_ratios(np.full(50, 0.01))
    assert math.isnan(r.sortino) and "sortino" in r.undefined
    assert "ir" in r.undefined


def test_compute_metrics_simple_path():
    net = np.full(252, 0.001)
    values = np.cumprod(1 + net)
    turnover = np.r_[1.0, np.full(251, 0.02)]
    m = compute_metrics(net, values, turnover)
    assert m.total_return == pytest.approx((values[-1] - 1) * 100)
    assert m.annual_return == pytest.approx(m.total_return)
    assert m.avg_turnover == pytest.approx(2.0)
    assert m.max_drawdown == 0.0


def test_pca_shares():
    rng = np.random.default_rng(2)
    iso = np.linalg.qr(rng.normal(size=(10, 10)))[0] * math.sqrt(10 - 1)
    shares = eigen_shares(np.vstack([iso, -iso]))
    np.testing.assert_allclose(shares, 0.1, atol=1e-12)
    assert n_components_for(shares) == 9
    z = rng.normal(size=(200, 1))
    rank1 = z @ np.array([[1.0, 2.0, -0.5]])
    assert eigen_shares(rank1)[0] == pytest.approx(1.0, abs=1e-12)
    dyn = pca_explained_dynamics([rank1, rank1], [rank1, rank1], [rank1, rank1])
    assert dyn.k == 1 and np.allclose(dyn.residuals, 1.0)


def _panel(R):
    dates = np.datetime64("2020-01-01") + np.arange(len(R))
    return ReturnPanel(dates, [f"A{j}" for j in range(R.shape[1])], R)


def test_ewbh_single_and_identical_assets():
    r = np.random.default_rng(3).normal(0, 0.01, (60, 1))
    one = ewbh_benchmark(_panel(r), cost_rate=0.001)
    growth = np.exp(r[:, 0])
    held = (growth[0] - 0.001) * np.r_[1.0, np.cumprod(growth[1:])]
    np.testing.assert_allclose(one.value, held, rtol=1e-12)
    two = ewbh_benchmark(_panel(np.column_stack([r, r])), cost_rate=0.001)
    np.testing.assert_allclose(two.value, held, rtol=1e-12)
    assert np.all(two.cost[1:] == 0)


def _fast_cfg(**kw):
    base = dict(window=120, n_scenarios=300, alphas=(0.5,), factor_model="none", max_arma=1, max_garch=1,
                n_starts=1, n_days=8, seed=3)
    return BacktestConfig(**{**base, **kw})


def test_ledger_identity_and_turnover_cap():
    m = make_market(140, 3, seed=4)
    run = run_backtest(m.prices, m.factors, _fast_cfg(alphas=(0.0, 0.9)))
    for lg in list(run.ledgers.values()) + [run.benchmark]:
        prev = np.r_[lg.initial_value, lg.value[:-1]]
        np.testing.assert_allclose(lg.value, prev * (1 + lg.gross) - lg.cost, rtol=1e-15)
        np.testing.assert_allclose(lg.value, prev * (1 + lg.net), rtol=1e-14)
        np.testing.assert_allclose(lg.weights_after.sum(axis=1), 1.0, atol=1e-9)
    for lg in run.ledgers.values():
        assert np.all(lg.turnover[1:] <= 0.05 + 2e-9)
        np.testing.assert_array_equal(lg.weights_before[1:], lg.weights_after[:-1])


def test_single_asset_run():
    m = make_market(130, 1, seed=5)
    cfg = _fast_cfg(n_days=5, cost_rate=0.001)
    lg = run_backtest(m.prices, None, cfg).ledger
    np.testing.assert_allclose(lg.weights_after, 1.0)
    simple = np.expm1(np.diff(np.log(np.asarray(m.prices.prices)[:, 0])))[cfg.window: cfg.window + 5]
    np.testing.assert_allclose(lg.gross, simple, rtol=1e-12)
    assert lg.cost[0] == pytest.approx(0.001) and np.all(lg.cost[1:] == 0)


def test_factor_branch_isolated():
    m = make_market(140, 2, seed=6)
    a = run_backtest(m.prices, m.factors, _fast_cfg(n_days=3, factor_model="none"))
    b = run_backtest(m.prices, m.factors, _fast_cfg(n_days=3, factor_model="rlr"))
    cols = ["date", "ticker", "p", "q", "P", "Q", "arma_garch_bic"]
    assert a.diagnostics[cols].equals(b.diagnostics[cols])
    assert not a.ledger.equals(b.ledger)


def test_config_collects_all_problems():
    with pytest.raises(ConfigError) as exc:
        BacktestConfig(alphas=(1.5,), factor_model="svm", beta=1.0)
    assert {"alphas", "factor_model", "beta"} <= set(exc.value.problems)


@pytest.mark.slow
def test_optimizer_beats_equal_weight_on_clear_drift():
    wins = 0
    for seed in range(10):
        m = make_market(550, 3, seed=seed, drifts=[2e-3, -5e-4, -5e-4])
        cfg = BacktestConfig(window=250, n_scenarios=1000, alphas=(0.9,), factor_model="none", max_arma=0,
                             max_garch=1, n_starts=1, seed=seed, n_days=300)
        run = run_backtest(m.prices, m.factors, cfg)
        wins += run.ledger.value[-1] >= run.benchmark.value[-1]
    assert wins >= 7
