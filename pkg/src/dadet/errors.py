"""Exception hierarchy shared across the package.

The CLI maps these to exit codes (config 2, data 3, numeric 4) and the
service maps them to HTTP error bodies, so everything user-facing should
raise one of these rather than bare ValueError.
"""


class DadetError(Exception):
    """Base class for all package errors."""


class ConfigError(DadetError):
    """Invalid configuration, hyperparameters, or input shapes."""


class DataError(DadetError):
    """Missing, malformed, or inconsistent dataset/annotation files."""


class CheckpointError(DataError):
    """Corrupt or incomplete checkpoint archive."""


class NumericError(DadetError):
    """Non-finite loss or gradient; training aborts rather than skipping."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
