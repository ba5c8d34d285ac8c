"""Error hierarchy shared by every module; the CLI maps each class to an exit code."""

from __future__ import annotations


class FraccurError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(FraccurError, ValueError):
    """Malformed input, bad parameters, unparsable specs."""

    exit_code = 2


class PreconditionError(FraccurError, ValueError):
    """Mathematical hypothesis of an operation is violated (e.g. beta >= 1)."""

    exit_code = 3


class NumericalError(FraccurError, RuntimeError):
    """Solver failure or a numerical quantity that should be finite is not."""

    exit_code = 4
