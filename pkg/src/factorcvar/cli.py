"""Command-line front end.

Subcommands::

    fit        fit the BIC-selected ARMA-GARCH model of one asset on one window
    simulate   write one date's scenario matrix
    optimize   scenario CSV -> mean-CVaR weights
    backtest   full rolling run: ledger, metrics, values, diagnostics, PCA
    report     ledger CSV -> metric tables

Exit status: 0 on success, 1 on a runtime failure, 2 on a configuration error.
Logging goes to stderr; results go to files in ``--out-dir``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .backtest.engine import arma_seed, fit_window, run_backtest, scenario_seed, simulate_scenarios
from .backtest.report import split_ledger_frame, write_report, write_run
from .config import RunConfig, build_run_config, read_config_file
from .cvaropt import OptConfig, ScenarioMatrix, optimize_portfolio
from .data import compute_log_returns, load_dataset, make_window
from .errors import ConfigError, FactorCvarError, ParseError
from .fileio import atomic_write_csv, atomic_write_text
from .timeseries import all_specs, fit_to_record, select_model_bic

log = logging.getLogger("factorcvar")

COMMANDS = ("fit", "simulate", "optimize", "backtest", "report")
_STOCHASTIC = ("simulate", "backtest")
_NEEDS_PRICES = ("fit", "simulate", "backtest")

# flag name -> (type, help)
_BT_FLAGS = {
    "window": (int, "rolling window length in rows"),
    "n_scenarios": (int, "scenarios per date"),
    "beta": (float, "CVaR level of the optimizer"),
    "alphas": (str, "comma-separated risk/reward grid"),
    "cost_rate": (float, "proportional cost per unit traded"),
    "turnover_cap": (str, "cap on sum |weight change| ('none' to disable)"),
    "factor_model": (str, "none, rlr or gam"),
    "max_arma": (int, "largest ARMA order tried"),
    "max_garch": (int, "largest GARCH order tried"),
    "n_starts": (int, "optimizer starts per ARMA-GARCH spec"),
    "robust_loss": (str, "huber or tukey"),
    "lp_tol": (float, "LP tolerance"),
    "start": (int, "first out-of-sample row"),
    "n_days": (int, "number of out-of-sample rows"),
    "initial_value": (float, "starting portfolio value"),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--log-level", type=str)
    p.add_argument("--seed", type=int)
    p.add_argument("--prices", type=Path)
    p.add_argument("--universe", type=Path)
    p.add_argument("--factors", type=Path)
    g = p.add_argument_group("backtest settings")
    for name, (typ, help_) in _BT_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, help=help_)
    g.add_argument("--alpha", type=float, help="single risk/reward value (overrides --alphas)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="factorcvar", description="Factor-enhanced mean-CVaR portfolio tools.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    sub.required = True
    p = sub.add_parser("fit", help="fit one asset's ARMA-GARCH model on one window")
    _common(p)
    p.add_argument("--ticker")
    p.add_argument("--row", type=int, help="window ends just before this return row (default: end of data)")
    p = sub.add_parser("simulate", help="scenario matrix for one date")
    _common(p)
    p.add_argument("--row", type=int, help="window ends just before this return row (default: end of data)")
    p = sub.add_parser("optimize", help="weights from a scenario CSV")
    _common(p)
    p.add_argument("--scenarios", type=Path, required=True, help="CSV of simple returns, one column per asset")
    p.add_argument("--prev-weights", type=str, help="comma-separated previous weights")
    p = sub.add_parser("backtest", help="full rolling backtest")
    _common(p)
    p = sub.add_parser("report", help="metric tables from a ledger CSV")
    _common(p)
    p.add_argument("--ledger", type=Path, help="ledger CSV (default: <out-dir>/ledger.csv)")
    return parser


def _convert_flag(name: str, value):
    if name == "alphas":
        return tuple(float(x) for x in str(value).split(",") if x.strip())
    if name == "turnover_cap":
        return None if str(value).lower() == "none" else float(value)
    return value


def parse_and_validate(argv) -> tuple[str, RunConfig, argparse.Namespace]:
    """Parse ``argv``; flags override the config file, defaults fill the rest."""
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    problems = {}
    for name in list(_BT_FLAGS) + ["prices", "universe", "factors", "out_dir", "log_level", "seed"]:
        v = getattr(args, name, None)
        if v is None:
            continue
        try:
            values[name] = _convert_flag(name, v)
        except ValueError:
            problems[name] = f"cannot parse {v!r}"
    if args.alpha is not None:
        values["alphas"] = (args.alpha,)
    if problems:
        raise ConfigError(problems)
    cfg = build_run_config(
        values,
        require_prices=args.command in _NEEDS_PRICES,
        require_seed=args.command in _STOCHASTIC,
    )
    return args.command, cfg, args


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _dataset(cfg: RunConfig):
    prices, factors, _ = load_dataset(cfg.prices, cfg.universe, cfg.factors)
    return compute_log_returns(prices), factors


def _row(args, n: int) -> int:
    return n if args.row is None else args.row


def _cmd_fit(cfg: RunConfig, args) -> None:
    returns, _ = _dataset(cfg)
    ticker = args.ticker or returns.tickers[0]
    if ticker not in returns.tickers:
        raise ConfigError({"ticker": f"{ticker!r} not in the price file"})
    i = returns.tickers.index(ticker)
    bt = cfg.backtest
    t = _row(args, len(returns))
    win = make_window(returns, None, t, bt.window)
    fit = select_model_bic(win.return_slice[:, i], all_specs(bt.max_arma, bt.max_garch),
                           n_starts=bt.n_starts, seed=arma_seed(bt.seed, t, i))
    path = atomic_write_text(cfg.out_dir / f"fit_{ticker}.txt", fit_to_record(fit))
    log.info("wrote %s (%s, BIC %.3f)", path, fit.spec, fit.bic)


def _cmd_simulate(cfg: RunConfig, args) -> None:
    returns, factors = _dataset(cfg)
    bt = cfg.backtest
    t = _row(args, len(returns))
    win = make_window(returns, factors if bt.factor_model != "none" else None, t, bt.window)
    model = fit_window(win, bt)
    scen = ScenarioMatrix.from_log_returns(simulate_scenarios(model, bt.n_scenarios, scenario_seed(bt.seed, t)))
    df = pd.DataFrame(np.asarray(scen.returns), columns=list(returns.tickers))
    path = atomic_write_csv(cfg.out_dir / "scenarios.csv", df)
    log.info("wrote %s (%d scenarios)", path, scen.n_scenarios)


def read_scenarios_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Strict reader: header of tickers, then one numeric row per scenario."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, None, "empty file") from None
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise ParseError(path, 1, None, "header must name every column")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, line_no, None, f"expected {len(header)} fields, found {len(row)}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(path, line_no, col, f"not a number: {cell!r}") from None
                if not np.isfinite(v):
                    raise ParseError(path, line_no, col, f"not finite: {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError(path, 2, None, "no scenario rows")
    return tuple(header), np.array(rows)


def _cmd_optimize(cfg: RunConfig, args) -> None:
    tickers, R = read_scenarios_csv(args.scenarios)
    bt = cfg.backtest
    prev = None
    if args.prev_weights:
        try:
            prev = np.array([float(x) for x in args.prev_weights.split(",")])
        except ValueError:
            raise ConfigError({"prev_weights": "must be comma-separated numbers"}) from None
        if prev.size != len(tickers):
            raise ConfigError({"prev_weights": f"need {len(tickers)} values"})
    res = optimize_portfolio(
        ScenarioMatrix(R, tickers),
        OptConfig(bt.alphas[0], bt.beta, prev, bt.turnover_cap if prev is not None else None, bt.lp_tol),
    )
    atomic_write_csv(cfg.out_dir / "weights.csv", pd.DataFrame({"ticker": tickers, "weight": res.weights}))
    summary = pd.DataFrame([{
        "alpha": bt.alphas[0], "beta": bt.beta, "objective": res.objective,
        "expected_return": res.expected_return, "cvar": res.cvar, "nu": res.nu, "status": res.status,
    }])
    atomic_write_csv(cfg.out_dir / "optimize_summary.csv", summary)
    log.info("weights %s", np.round(res.weights, 6).tolist())


def _cmd_backtest(cfg: RunConfig, args) -> None:
    returns, factors = _dataset(cfg)
    run = run_backtest(returns, factors, cfg.backtest)
    paths = write_run(run, cfg.out_dir)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))


def _cmd_report(cfg: RunConfig, args) -> None:
    path = args.ledger or cfg.out_dir / "ledger.csv"
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(path, 1, None, str(exc)) from None
    missing = {"date", "strategy", "alpha", "net", "value", "turnover"} - set(df.columns)
    if missing:
        raise ParseError(path, 1, None, f"missing columns {sorted(missing)}")
    paths = write_report(split_ledger_frame(df), cfg.out_dir)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))


_DISPATCH = {
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "backtest": _cmd_backtest,
    "report": _cmd_report,
}


def dispatch(cfg: RunConfig, command: str, args=None) -> int:
    try:
        _DISPATCH[command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FactorCvarError, OSError, ValueError) as exc:
        stage = getattr(exc, "stage", command)
        date = getattr(exc, "date", None)
        where = f" [stage={stage}" + (f", date={date}" if date is not None else "") + "]"
        print(f"error{where}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, cfg, args = parse_and_validate(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=cfg.log_level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")
    return dispatch(cfg, command, args)


if __name__ == "__main__":
    sys.exit(main())
