"""Exception hierarchy shared by all subpackages."""

from __future__ import annotations


class FactorCvarError(Exception):
    """Base class for every error raised by the library."""


# data
class NonPositivePriceError(FactorCvarError, ValueError):
    pass


class InsufficientRowsError(FactorCvarError, ValueError):
    pass


class WindowTooLongError(FactorCvarError, ValueError):
    pass


class MisalignedSeriesError(FactorCvarError, ValueError):
    pass


class WindowOutOfRangeError(FactorCvarError, IndexError):
    pass


# timeseries
class ConstantSeriesError(FactorCvarError, ValueError):
    pass


class OptimizerDivergedError(FactorCvarError, RuntimeError):
    pass


class AllFitsFailedError(FactorCvarError, RuntimeError):
    pass


class MissingStateError(FactorCvarError, ValueError):
    pass


# factors
class SingularDesignError(FactorCvarError, ValueError):
    pass


class SingularSystemError(FactorCvarError, ValueError):
    pass


class OutOfDomainError(FactorCvarError, ValueError):
    pass


# nig
class NonPositiveArgumentError(FactorCvarError, ValueError):
    pass


class SingularDispersionError(FactorCvarError, ValueError):
    pass


class InvalidParameterError(FactorCvarError, ValueError):
    pass


class RankDeficientDataError(FactorCvarError, ValueError):
    pass


# cvaropt
class InvalidConfigError(FactorCvarError, ValueError):
    pass


class InfeasibleError(FactorCvarError, RuntimeError):
    pass


class UnboundedError(FactorCvarError, RuntimeError):
    pass


class NumericalFailureError(FactorCvarError, RuntimeError):
    pass


# backtest
class BacktestStepError(FactorCvarError, RuntimeError):
    """A pipeline step failed on a specific date; carries the stage and date."""

    def __init__(self, stage: str, date, cause: BaseException):
        self.stage = stage
        self.date = date
        self.cause = cause
        super().__init__(f"{stage} failed on {date}: {cause}")


# cli
class ConfigError(FactorCvarError, ValueError):
    """Configuration validation failure listing every offending field."""

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        self.fields = sorted(self.problems)
        lines = [f"{k}: {v}" for k, v in sorted(self.problems.items())]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class ParseError(FactorCvarError, ValueError):
    """Malformed input file; carries the offending location."""

    def __init__(self, path, line: int, column: int | None, message: str):
        self.path, self.line, self.column = str(path), line, column
        where = f"{self.path}:{line}" + (f":{column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
