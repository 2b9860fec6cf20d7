"""Exception hierarchy. Each class maps to one CLI exit code."""


class SurroptError(Exception):
    exit_code = 1


class ConfigError(SurroptError, ValueError):
    """Invalid problem description, option, or tag."""

    exit_code = 2


class ObjectiveError(SurroptError, RuntimeError):
    """The objective failed or returned something other than a finite scalar."""

    exit_code = 3


class NumericalError(SurroptError, ArithmeticError):
    """A surrogate system could not be solved reliably."""

    exit_code = 4
