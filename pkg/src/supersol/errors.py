"""Exception hierarchy shared by the numerical modules and the CLI."""


class SupersolError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SupersolError, ValueError):
    """An input lies outside the admissible parameter range."""


class RangeError(SupersolError, OverflowError):
    """A value cannot be represented in double precision."""


class ConstructionError(SupersolError, ValueError):
    """A derived object (potential, grid, ...) cannot be built."""


class ContractError(SupersolError, ValueError):
    """An operation was called outside its documented contract."""


class DataError(SupersolError, ValueError):
    """Input data (series, trajectories) is malformed."""


class ConfigError(SupersolError, ValueError):
    """A configuration file or CLI invocation is invalid."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
