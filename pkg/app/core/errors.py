# app/core/errors.py
"""Exception hierarchy. Each class carries the process exit code main() returns for it."""


class DyadicError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ArgumentError(DyadicError, ValueError):
    """An argument is outside the documented range of an operation."""

    exit_code = 2


class DimensionError(DyadicError, ValueError):
    """Image is not square with a power-of-two side."""

    exit_code = 3


class ParseError(DyadicError, ValueError):
    """Malformed PGM or CSV input."""

    exit_code = 4


class ResourceError(DyadicError):
    """Exhaustive computation requested beyond its size limit."""

    exit_code = 5


class ConsistencyError(DyadicError):
    """Two independent evaluations of the same quantity disagree."""

    exit_code = 6


class BoundViolation(ConsistencyError):
    """A proven bound failed to hold numerically."""


def require(condition: bool, message: str, error: type[DyadicError] = ArgumentError) -> None:
    if not condition:
        raise error(message)
