"""
Exception hierarchy shared by the solver and model packages.

The CLI maps each family to an exit code (see `exit_code_for`):
  0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations


class GptError(Exception):
    """Base class for every error raised by this project."""
    exit_code: int = 1


class ArgumentError(GptError, ValueError):
    """A caller passed arguments that violate an operation's preconditions."""
    exit_code = 2


class DomainError(GptError, ValueError):
    """An input lies outside the mathematical domain of a map (e.g. Tr[rho] != 1)."""
    exit_code = 3


class ConfigError(GptError):
    """Invalid run configuration (JSON file or CLI overrides)."""
    exit_code = 2


class DataError(GptError):
    """Malformed or inconsistent data: zero-count cells, bad files, failed fits."""
    exit_code = 3


class NumericalError(GptError):
    """Numerical failure: singular gauge, rank deficiency, broken invariants."""
    exit_code = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, GptError):
        return exc.exit_code
    return 1
