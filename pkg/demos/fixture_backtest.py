"""End-to-end run on the bundled synthetic market through the command line.

Writes the market to a scratch directory, runs ``backtest`` and then
``report`` on the resulting ledger, and prints the metric table.  The
default of 20 out-of-sample days keeps the demo to a few seconds per day;
pass a larger number as the first argument for a longer run.

Run:  python3 demos/fixture_backtest.py [n_days]
"""

import sys
import tempfile
from pathlib import Path

import pandas as pd

from factorcvar.cli import main
from factorcvar.synthetic import fixture_market, write_market

n_days = int(sys.argv[1]) if len(sys.argv) > 1 else 20

with tempfile.TemporaryDirectory() as tmp:
    cfg = write_market(fixture_market(), tmp, seed=20240517, n_days=n_days)
    out = Path(tmp) / "out"
    if main(["backtest", "--config", str(cfg), "--log-level", "WARNING"]) != 0:
        sys.exit("backtest failed")
    if main(["report", "--config", str(cfg), "--log-level", "WARNING"]) != 0:
        sys.exit("report failed")
    metrics = pd.read_csv(out / "metrics.csv").set_index("strategy")
    cols = ["total_return", "annual_return", "avg_turnover", "cvar_l95", "max_drawdown"]
    with pd.option_context("display.width", 120, "display.precision", 3):
        print(metrics[cols].T)
    print("\nfiles:", ", ".join(sorted(p.name for p in out.iterdir())))
