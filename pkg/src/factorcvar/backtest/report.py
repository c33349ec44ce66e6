"""CSV outputs of a backtest: ledger, metric tables, value paths, diagnostics, PCA shares."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from ..fileio import atomic_write_csv
from .engine import BacktestLedger, BacktestRun
from .metrics import compute_metrics

PERFORMANCE_COLUMNS = ("total_return", "annual_return", "avg_turnover", "cvar_l95", "cvar_u95", "max_drawdown")
STATISTICS_COLUMNS = ("mean", "median", "std", "skew", "exkurt", "sdev")
RATIO_COLUMNS = ("ir", "sortino", "starr", "rachev", "gini")


def ledgers_frame(ledgers) -> pd.DataFrame:
    return pd.concat([lg.to_frame() for lg in ledgers], ignore_index=True)


def split_ledger_frame(df: pd.DataFrame) -> list[BacktestLedger]:
    """Inverse of :func:`ledgers_frame`."""
    return [BacktestLedger.from_frame(part.reset_index(drop=True)) for _, part in df.groupby("strategy", sort=False)]


def metrics_frame(ledgers) -> pd.DataFrame:
    rows = []
    for lg in ledgers:
        m = compute_metrics(lg.net, lg.value, lg.turnover, lg.initial_value).as_dict()
        rows.append({"strategy": lg.label, "alpha": lg.alpha, **m})
    return pd.DataFrame(rows)


def values_frame(ledgers) -> pd.DataFrame:
    ledgers = list(ledgers)
    df = pd.DataFrame({"date": pd.to_datetime(ledgers[0].dates).strftime("%Y-%m-%d")})
    for lg in ledgers:
        if not np.array_equal(lg.dates, ledgers[0].dates):
            raise ValueError(f"strategy {lg.label} covers different dates")
        df[lg.label] = lg.value
    return df


def write_report(ledgers, out_dir, diagnostics: pd.DataFrame | None = None,
                 pca: pd.DataFrame | None = None) -> dict[str, Path]:
    """Write ``metrics.csv`` and ``values.csv`` (plus diagnostics and PCA tables when given)."""
    out = Path(out_dir)
    ledgers = list(ledgers)
    paths = {
        "metrics": atomic_write_csv(out / "metrics.csv", metrics_frame(ledgers)),
        "values": atomic_write_csv(out / "values.csv", values_frame(ledgers)),
    }
    if diagnostics is not None:
        paths["diagnostics"] = atomic_write_csv(out / "diagnostics.csv", diagnostics)
    if pca is not None:
        paths["pca"] = atomic_write_csv(out / "pca.csv", pca)
    return paths


def write_run(run: BacktestRun, out_dir) -> dict[str, Path]:
    ledgers = list(run.ledgers.values())
    if run.benchmark is not None:
        ledgers = [run.benchmark] + ledgers
    paths = {"ledger": atomic_write_csv(Path(out_dir) / "ledger.csv", ledgers_frame(ledgers))}
    paths.update(write_report(ledgers, out_dir, run.diagnostics, run.pca))
    return paths
