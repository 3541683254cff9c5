"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
ConvergenceError -> 4.
"""


class RetweetShiftError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RetweetShiftError):
    """Invalid or inconsistent run configuration."""


class DataError(RetweetShiftError):
    """Malformed, missing, or semantically invalid input data."""


class ConvergenceError(RetweetShiftError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
