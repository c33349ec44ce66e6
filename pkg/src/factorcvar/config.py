"""Run configuration: an INI file merged with command-line overrides.

File layout (every key optional)::

    [data]
    prices = data/prices.csv        ; dated close prices, one column per ticker
    universe = data/universe.ini    ; optional manifest restricting tickers/factors
    factors = data/factors          ; directory holding <ticker>.csv factor files

    [backtest]
    window = 765
    n_scenarios = 10000
    beta = 0.99
    alphas = 0, 0.25, 0.5
    cost_rate = 0.0002
    turnover_cap = 0.05             ; "none" disables the cap
    factor_model = gam              ; none | rlr | gam
    max_arma = 2
    max_garch = 2
    n_starts = 5
    robust_loss = huber
    lp_tol = 1e-9
    start =                         ; first out-of-sample row (default: window)
    n_days =                        ; number of out-of-sample rows (default: all)
    initial_value = 1.0

    [run]
    out_dir = out
    log_level = INFO
    seed = 42

Relative paths are resolved against the directory of the config file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .backtest.engine import BacktestConfig
from .errors import ConfigError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

_INT = {"window", "n_scenarios", "max_arma", "max_garch", "n_starts", "start", "n_days", "seed"}
_FLOAT = {"beta", "cost_rate", "lp_tol", "initial_value"}
_OPTIONAL = {"turnover_cap", "start", "n_days"}


@dataclass(frozen=True)
class RunConfig:
    prices: Path | None = None
    universe: Path | None = None
    factors: Path | None = None
    out_dir: Path = Path("out")
    log_level: str = "INFO"
    seed: int | None = None
    backtest: BacktestConfig = field(default_factory=BacktestConfig)

    def to_ini(self) -> str:
        """Serialize to the file format read by :func:`read_config_file`."""
        cp = configparser.ConfigParser()
        cp["data"] = {k: str(getattr(self, k)) for k in ("prices", "universe", "factors") if getattr(self, k)}
        bt = {}
        for f in fields(BacktestConfig):
            if f.name == "seed":
                continue
            v = getattr(self.backtest, f.name)
            if f.name == "alphas":
                bt[f.name] = ", ".join(repr(a) for a in v)
            elif v is None:
                bt[f.name] = "none"
            else:
                bt[f.name] = repr(v) if isinstance(v, float) else str(v)
        cp["backtest"] = bt
        run = {"out_dir": str(self.out_dir), "log_level": self.log_level}
        if self.seed is not None:
            run["seed"] = str(self.seed)
        cp["run"] = run
        from io import StringIO

        buf = StringIO()
        cp.write(buf)
        return buf.getvalue()


def _convert(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL and raw.lower() in ("", "none"):
        return None
    if key == "alphas":
        return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
    if key in _INT:
        return int(raw)
    if key in _FLOAT or key == "turnover_cap":
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    """Flat ``{key: value}`` dict of a config file (values already typed)."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise ConfigError({"config": f"cannot read {path}"})
    out, problems = {}, {}
    base = path.parent
    for section in cp.sections():
        for key, raw in cp[section].items():
            try:
                val = _convert(key, raw)
            except ValueError:
                problems[key] = f"cannot parse {raw!r}"
                continue
            if key in ("prices", "universe", "factors", "out_dir") and val:
                p = Path(val)
                val = p if p.is_absolute() else base / p
            out[key] = val
    if problems:
        raise ConfigError(problems)
    return out


def build_run_config(values: dict, require_prices: bool = True, require_seed: bool = False,
                     check_paths: bool = True) -> RunConfig:
    """Validate merged settings; every problem is reported at once."""
    problems = {}
    bt_names = set(BacktestConfig.field_names())
    known = bt_names | {"prices", "universe", "factors", "out_dir", "log_level", "seed"}
    for k in values:
        if k not in known:
            problems[k] = "unknown setting"
    bt_kwargs = {k: v for k, v in values.items() if k in bt_names and k != "seed" and v is not None}
    for k in _OPTIONAL & bt_names:
        if k in values and values[k] is None:
            bt_kwargs[k] = None
    seed = values.get("seed")
    if seed is not None:
        bt_kwargs["seed"] = seed
    elif require_seed:
        problems["seed"] = "required for this subcommand"
    bt = None
    try:
        bt = BacktestConfig(**bt_kwargs)
    except ConfigError as exc:
        problems.update(exc.problems)
    except TypeError as exc:
        problems["backtest"] = str(exc)
    level = str(values.get("log_level", "INFO")).upper()
    if level not in LOG_LEVELS:
        problems["log_level"] = f"must be one of {LOG_LEVELS}"
    paths = {}
    for key in ("prices", "universe", "factors"):
        v = values.get(key)
        if v is None:
            if key == "prices" and require_prices:
                problems["prices"] = "missing"
            continue
        p = Path(v)
        if check_paths and not p.exists():
            problems[key] = f"{p} does not exist"
        paths[key] = p
    if problems:
        raise ConfigError(problems)
    return RunConfig(
        prices=paths.get("prices"),
        universe=paths.get("universe"),
        factors=paths.get("factors"),
        out_dir=Path(values.get("out_dir", "out")),
        log_level=level,
        seed=seed,
        backtest=bt,
    )


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)
