"""Box-constrained problem definitions, builtin test functions and external objectives.

A problem is minimize f(x) subject to lower <= x <= upper, with a subset of
the coordinates restricted to integers.  Problems are usually described in a
small YAML (or JSON) file::

    name: branin
    dim: 2
    lower: [-5, 0]
    upper: [10, 15]
    integer_idx: []          # 1-based coordinate indices
    objective:
      kind: builtin          # or: command
      name: branin           # builtin function name
      # cmd: "python sim.py" # for kind: command

Integer indices in the file are 1-based; :class:`ProblemSpec` stores them
0-based.
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import yaml

from .exceptions import ConfigError, ObjectiveError

__all__ = [
    "ProblemSpec",
    "EvaluationRecord",
    "CommandObjective",
    "load_problem",
    "evaluate",
    "builtin_problem",
    "is_feasible",
    "BUILTIN_FUNCTIONS",
]


def sphere(x):
    return float(np.sum(np.square(x)))


def branin(x):
    x1, x2 = x[0], x[1]
    a, b, c = 1.0, 5.1 / (4.0 * math.pi**2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8.0 * math.pi)
    return float(a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * math.cos(x1) + s)


def ackley(x):
    x = np.asarray(x, dtype=float)
    d = x.size
    a, b, c = 20.0, 0.2, 2.0 * math.pi
    s1 = math.sqrt(np.sum(x * x) / d)
    s2 = np.sum(np.cos(c * x)) / d
    return float(-a * math.exp(-b * s1) - math.exp(s2) + a + math.e)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * math.pi * x)))


# name -> (function, fixed dimension or None, (lower, upper) per coordinate)
BUILTIN_FUNCTIONS: dict[str, tuple[Callable, int | None, tuple]] = {
    "sphere": (sphere, None, (-5.12, 5.12)),
    "branin": (branin, 2, ((-5.0, 0.0), (10.0, 15.0))),
    "ackley": (ackley, None, (-32.768, 32.768)),
    "rastrigin": (rastrigin, None, (-5.12, 5.12)),
}


@dataclass(frozen=True)
class EvaluationRecord:
    point: np.ndarray
    value: float
    eval_index: int
    epoch: int
    wall_time: float = 0.0
    best_so_far: float = math.inf
    w_r: float | None = None
    sigma: float | None = None


class CommandObjective:
    """Objective backed by an external executable.

    The point is written as one line of space separated decimals.  If the
    command template contains ``{x}`` the line is substituted there,
    otherwise it is sent on stdin.  The process must print a single number
    and exit with status 0.
    """

    def __init__(self, cmd: str, timeout: float | None = None):
        self.cmd = cmd
        self.timeout = timeout

    def __call__(self, x) -> float:
        line = " ".join(repr(float(v)) for v in np.asarray(x).ravel())
        if "{x}" in self.cmd:
            args = shlex.split(self.cmd.replace("{x}", line))
            stdin = None
        else:
            args = shlex.split(self.cmd)
            stdin = line + "\n"
        try:
            proc = subprocess.run(
                args, input=stdin, capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ObjectiveError(f"command {self.cmd!r} failed at x=[{line}]: {exc}") from exc
        if proc.returncode != 0:
            raise ObjectiveError(
                f"command {self.cmd!r} exited with {proc.returncode} at x=[{line}]: "
                f"{proc.stderr.strip()}"
            )
        try:
            (token,) = proc.stdout.split()
            return float(token)
        except ValueError:
            raise ObjectiveError(
                f"command {self.cmd!r} produced unparsable output {proc.stdout!r} at x=[{line}]"
            ) from None

    def __repr__(self):
        return f"CommandObjective({self.cmd!r})"


@dataclass(frozen=True)
class ProblemSpec:
    """An immutable box-constrained (mixed-integer) problem.

    ``integer_idx`` holds 0-based coordinate indices.  Bounds of integer
    coordinates are integral.
    """

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    integer_idx: tuple[int, ...]
    objective: Callable = field(repr=False)
    name: str = "problem"

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        if self.dim < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if lower.size != self.dim or upper.size != self.dim:
            raise ConfigError(f"bounds must have {self.dim} entries each")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigError("bounds must be finite")
        idx = tuple(sorted({int(i) for i in self.integer_idx}))
        if idx and (idx[0] < 0 or idx[-1] >= self.dim):
            raise ConfigError(f"integer index out of range for dim={self.dim}")
        if idx:
            ii = list(idx)
            lower[ii] = np.ceil(lower[ii] - 1e-12)
            upper[ii] = np.floor(upper[ii] + 1e-12)
        bad = np.flatnonzero(lower >= upper)
        if bad.size:
            raise ConfigError(f"lower >= upper for coordinate(s) {(bad + 1).tolist()}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "integer_idx", idx)

    @property
    def int_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(self.integer_idx)] = True
        return mask

    @property
    def cont_idx(self) -> np.ndarray:
        return np.flatnonzero(~self.int_mask)

    @property
    def n_cont(self) -> int:
        return self.dim - len(self.integer_idx)

    @property
    def n_int(self) -> int:
        return len(self.integer_idx)

    @property
    def kind(self) -> str:
        """``"continuous"``, ``"integer"`` or ``"mixed"``."""
        if self.n_int == 0:
            return "continuous"
        if self.n_cont == 0:
            return "integer"
        return "mixed"

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def dedup_tol(self) -> float:
        """Candidates closer than this to an evaluated point are discarded."""
        if self.kind == "integer":
            return 0.0
        return 1e-3 * float(np.min(self.widths))

    def round_feasible(self, X) -> np.ndarray:
        """Clip to the box and round integer coordinates to the nearest integer."""
        X = np.clip(np.array(X, dtype=float), self.lower, self.upper)
        if self.integer_idx:
            ii = list(self.integer_idx)
            X[..., ii] = np.clip(np.round(X[..., ii]), self.lower[ii], self.upper[ii])
        return X

    def evaluate(self, x) -> float:
        return evaluate(self, x)


def is_feasible(spec: ProblemSpec, X) -> np.ndarray:
    """Row-wise bounds + integrality check (exact)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = np.all((X >= spec.lower) & (X <= spec.upper), axis=1)
    if spec.integer_idx:
        Xi = X[:, list(spec.integer_idx)]
        ok &= np.all(Xi == np.round(Xi), axis=1)
    return ok


def evaluate(spec: ProblemSpec, point) -> float:
    """Evaluate the objective at a feasible point.

    :raises ValueError: if the point is infeasible
    :raises ObjectiveError: if the objective fails or returns a non-finite value
    """
    x = np.asarray(point, dtype=float).ravel()
    if x.size != spec.dim:
        raise ValueError(f"point has {x.size} coordinates, expected {spec.dim}")
    if not is_feasible(spec, x)[0]:
        raise ValueError(f"point {x.tolist()} violates bounds or integrality")
    try:
        value = spec.objective(x.copy())
    except ObjectiveError:
        raise
    except Exception as exc:
        raise ObjectiveError(f"objective raised at x={x.tolist()}: {exc!r}") from exc
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ObjectiveError(f"objective returned non-scalar {value!r} at x={x.tolist()}") from None
    if not math.isfinite(value):
        raise ObjectiveError(f"objective returned non-finite value {value} at x={x.tolist()}")
    return value


def _split_variant(name: str) -> tuple[str, str]:
    base, _, variant = name.partition("-")
    return base, variant


def builtin_problem(name: str, dim: int | None = None) -> ProblemSpec:
    """Return a catalogue problem with its canonical bounds.

    ``name`` is a base function (sphere, branin, ackley, rastrigin), optionally
    suffixed with ``-int`` (all coordinates integer) or ``-mixed`` (the second
    half of the coordinates integer).
    """
    base, variant = _split_variant(name)
    if base not in BUILTIN_FUNCTIONS or variant not in ("", "int", "mixed"):
        raise ConfigError(
            f"unknown builtin problem {name!r}; known: "
            + ", ".join(f"{b}[-int|-mixed]" for b in BUILTIN_FUNCTIONS)
        )
    func, fixed_dim, bounds = BUILTIN_FUNCTIONS[base]
    if dim is None:
        dim = fixed_dim or 2
    if fixed_dim is not None and dim != fixed_dim:
        raise ConfigError(f"{base} is only defined for dim={fixed_dim}")
    if fixed_dim is None:
        lower, upper = np.full(dim, bounds[0]), np.full(dim, bounds[1])
    else:
        lower, upper = np.array(bounds[0]), np.array(bounds[1])
    if variant == "int":
        integer_idx = range(dim)
    elif variant == "mixed":
        if dim < 2:
            raise ConfigError("mixed-integer variants need dim >= 2")
        integer_idx = range(dim - dim // 2, dim)
    else:
        integer_idx = ()
    return ProblemSpec(dim, lower, upper, tuple(integer_idx), func, name=name)


def _as_float_list(value, key: str) -> list[float]:
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of numbers") from None


def load_problem(config: dict | str | Path) -> ProblemSpec:
    """Build a validated :class:`ProblemSpec` from a mapping or a YAML/JSON file.

    ``integer_idx`` in the configuration is 1-based.  Non-integral bounds of
    integer coordinates are rounded inward.
    """
    if isinstance(config, (str, Path)):
        path = Path(config)
        try:
            config = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read problem file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse problem file {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("problem description must be a mapping")

    for key in ("lower", "upper"):
        if key not in config:
            raise ConfigError(f"missing bounds: {key!r} is required")
    lower = _as_float_list(config["lower"], "lower")
    upper = _as_float_list(config["upper"], "upper")
    try:
        dim = int(config.get("dim", len(lower)))
    except (TypeError, ValueError):
        raise ConfigError("dim must be an integer") from None
    if len(lower) != dim or len(upper) != dim:
        raise ConfigError(f"missing bounds: expected {dim} lower and upper values")

    raw_idx: Iterable = config.get("integer_idx") or []
    if isinstance(raw_idx, int):
        raw_idx = [raw_idx]
    integer_idx = []
    for i in raw_idx:
        if int(i) != i or not 1 <= int(i) <= dim:
            raise ConfigError(f"integer index {i} out of range 1..{dim}")
        integer_idx.append(int(i) - 1)

    obj = config.get("objective")
    if isinstance(obj, str):
        obj = {"kind": "builtin", "name": obj}
    if not isinstance(obj, dict):
        raise ConfigError("objective must be given (builtin name or command)")
    kind = obj.get("kind", "builtin")
    if kind == "builtin":
        fname = obj.get("name")
        if fname not in BUILTIN_FUNCTIONS:
            raise ConfigError(
                f"unknown builtin objective {fname!r}; known: {', '.join(BUILTIN_FUNCTIONS)}"
            )
        func, fixed_dim, _ = BUILTIN_FUNCTIONS[fname]
        if fixed_dim is not None and fixed_dim != dim:
            raise ConfigError(f"builtin {fname} requires dim={fixed_dim}")
        objective = func
        default_name = fname
    elif kind == "command":
        cmd = obj.get("cmd")
        if not cmd or not isinstance(cmd, str):
            raise ConfigError("objective.cmd must be a non-empty command string")
        objective = CommandObjective(cmd, timeout=obj.get("timeout"))
        default_name = cmd.split()[0]
    else:
        raise ConfigError(f"objective.kind must be 'builtin' or 'command', got {kind!r}")

    return ProblemSpec(
        dim, lower, upper, tuple(integer_idx), objective, name=str(config.get("name", default_name))
    )
