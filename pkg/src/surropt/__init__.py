"""Surrogate-model optimization for expensive box-constrained black-box functions.

Continuous, pure-integer and mixed-integer problems are supported.  The main
entry point is :func:`optimize`::

    from surropt import builtin_problem, optimize, DriverOptions

    result = optimize(builtin_problem("branin"), DriverOptions(max_evals=100, seed=0))
"""

from .driver import DriverOptions, RunResult, evaluate_batch, optimize
from .exceptions import ConfigError, NumericalError, ObjectiveError, SurroptError
from .problem import ProblemSpec, builtin_problem, evaluate, load_problem

__all__ = [
    "DriverOptions",
    "RunResult",
    "ProblemSpec",
    "optimize",
    "evaluate",
    "evaluate_batch",
    "builtin_problem",
    "load_problem",
    "SurroptError",
    "ConfigError",
    "ObjectiveError",
    "NumericalError",
]

__version__ = "0.1.0"
