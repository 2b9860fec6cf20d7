"""Initial experimental designs: maximin Latin hypercube, symmetric LHD, corners."""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .problem import ProblemSpec, is_feasible

logger = logging.getLogger(__name__)

DESIGN_TAGS = ("CORNER", "SLHD", "lhd")

_MAX_REDRAWS = 100
_MAX_ENUMERATED_CORNERS = 2**14


@dataclass(frozen=True)
class DesignMatrix:
    points: np.ndarray
    strategy: str
    user_points: np.ndarray | None = None

    @property
    def all_points(self) -> np.ndarray:
        if self.user_points is None or len(self.user_points) == 0:
            return self.points
        return np.vstack([self.points, self.user_points])

    def __len__(self):
        return len(self.all_points)


def min_design_size(surrogate: str, d: int) -> int:
    """Smallest design that makes a fit of ``surrogate`` well posed in dimension ``d``."""
    from .surrogate import MIXTURES

    if surrogate in MIXTURES:
        return max(min_design_size(m, d) for m in MIXTURES[surrogate])
    sizes = {
        "RBFcub": d + 1,
        "RBFtps": d + 1,
        "RBFlin": d + 1,
        "MARS": d + 2,
        "POLYlin": d + 2,
        "POLYquad": (d + 1) * (d + 2) // 2 + 1,
        "POLYquadr": 2 * d + 2,
        "POLYcub": math.comb(d + 3, 3) + 1,
        "POLYcubr": 3 * d + 2,
    }
    try:
        return sizes[surrogate]
    except KeyError:
        raise ValueError(f"unknown surrogate tag {surrogate!r}") from None


def default_design_size(surrogate: str, d: int) -> int:
    return max(2 * (d + 1), min_design_size(surrogate, d))


def _scale(spec: ProblemSpec, U: np.ndarray) -> np.ndarray:
    """Map unit-cube points to the box.

    Integer coordinates are mapped onto [lower - 0.5, upper + 0.5] so that
    every integer level owns a cell of equal width before rounding.
    """
    lo = spec.lower.copy()
    hi = spec.upper.copy()
    if spec.integer_idx:
        ii = list(spec.integer_idx)
        lo[ii] -= 0.5
        hi[ii] += 0.5
    return lo + U * (hi - lo)


def _check_levels(n: int, spec: ProblemSpec) -> None:
    for i in spec.integer_idx:
        levels = int(spec.upper[i] - spec.lower[i]) + 1
        if n > levels:
            warnings.warn(
                f"design size {n} exceeds the {levels} integer levels of coordinate {i + 1}; "
                "columns cannot be stratified without repeats",
                stacklevel=3,
            )


def _finalize(spec: ProblemSpec, X: np.ndarray) -> np.ndarray:
    return spec.round_feasible(X)


def _has_duplicates(X: np.ndarray) -> bool:
    return len(np.unique(X, axis=0)) < len(X)


def _dedup(X: np.ndarray) -> np.ndarray:
    _, first = np.unique(X, axis=0, return_index=True)
    return X[np.sort(first)]


def _draw_until_distinct(draw, spec: ProblemSpec, n: int, name: str) -> np.ndarray:
    X = draw()
    if not spec.integer_idx:
        return X
    for _ in range(_MAX_REDRAWS):
        if not _has_duplicates(X):
            return X
        X = draw()
    if _has_duplicates(X):
        X = _dedup(X)
        warnings.warn(
            f"{name}: integer rounding left duplicate rows after {_MAX_REDRAWS} redraws; "
            f"keeping {len(X)} of {n} points",
            stacklevel=3,
        )
    return X


def lhs_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """One random Latin hypercube in [0, 1]^d with a uniform point per stratum."""
    U = np.empty((n, d))
    for j in range(d):
        U[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return U


def latin_hypercube(
    n: int, spec: ProblemSpec, rng: np.random.Generator, n_draws: int = 20
) -> DesignMatrix:
    """Best-of-``n_draws`` maximin Latin hypercube.

    Candidates are compared by their minimum pairwise distance in the unit
    cube; integer coordinates are rounded after selection.
    """
    if n < 2:
        raise ValueError("a Latin hypercube needs at least 2 points")
    _check_levels(n, spec)

    def draw():
        best, best_score = None, -np.inf
        for _ in range(n_draws):
            U = lhs_unit(n, spec.dim, rng)
            score = pdist(U).min()
            if score > best_score:
                best, best_score = U, score
        return _finalize(spec, _scale(spec, best))

    return DesignMatrix(_draw_until_distinct(draw, spec, n, "lhd"), "lhd")


def slhd_strata(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Stratum indices (1..n) of a symmetric Latin hypercube.

    Row ``i`` and row ``n - 1 - i`` satisfy ``k + k' = n + 1`` in every
    column; for odd ``n`` the middle row sits in the center stratum.
    """
    K = np.empty((n, d), dtype=int)
    half = n // 2
    if n % 2:
        K[half, :] = half + 1
    for j in range(d):
        perm = rng.permutation(half) + 1
        flip = rng.random(half) < 0.5
        top = np.where(flip, n + 1 - perm, perm)
        K[:half, j] = top
        K[n - half :, j] = (n + 1 - top)[::-1]
    return K


def symmetric_lhd(n: int, spec: ProblemSpec, rng: np.random.Generator) -> DesignMatrix:
    """Symmetric Latin hypercube; points sit at stratum centers so the set is
    invariant under x -> lower + upper - x before integer rounding."""
    if n < 2:
        raise ValueError("a symmetric Latin hypercube needs at least 2 points")
    _check_levels(n, spec)

    def draw():
        U = (slhd_strata(n, spec.dim, rng) - 0.5) / n
        return _finalize(spec, _scale(spec, U))

    return DesignMatrix(_draw_until_distinct(draw, spec, n, "SLHD"), "SLHD")


def greedy_maximin_subset(P: np.ndarray, k: int, start: int) -> list[int]:
    """Greedy max-min-distance selection of ``k`` rows of ``P`` starting at ``start``.

    Ties go to the lowest row index.
    """
    chosen = [start]
    dmin = np.linalg.norm(P - P[start], axis=1)
    dmin[start] = -np.inf
    while len(chosen) < k:
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, np.linalg.norm(P - P[nxt], axis=1))
        dmin[chosen] = -np.inf
    return chosen


def corner_design(n: int, spec: ProblemSpec, rng: np.random.Generator) -> DesignMatrix:
    """Box center plus ``n - 1`` corners chosen by greedy maximin.

    For d > 14 the corner pool is a random sample of 2^14 corners instead
    of the full enumeration.
    """
    d = spec.dim
    if d < 60 and n > 2**d + 1:
        raise ValueError(f"corner design holds at most 2^{d} + 1 = {2**d + 1} points")
    if n < 1:
        raise ValueError("corner design needs at least one point")
    if 2**d <= _MAX_ENUMERATED_CORNERS:
        bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=float)
    else:
        bits = rng.integers(0, 2, size=(_MAX_ENUMERATED_CORNERS, d)).astype(float)
        bits = np.unique(bits, axis=0)
    corners = spec.lower + bits * spec.widths
    k = n - 1
    if k >= len(corners):
        chosen = corners
    elif k > 0:
        start = int(rng.integers(len(corners)))
        chosen = corners[greedy_maximin_subset(corners, k, start)]
    else:
        chosen = corners[:0]
    center = spec.round_feasible(0.5 * (spec.lower + spec.upper))
    X = np.vstack([chosen, center[None, :]])
    return DesignMatrix(_dedup(X) if spec.integer_idx else X, "CORNER")


def validate_user_points(spec: ProblemSpec, points) -> np.ndarray:
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != spec.dim:
        raise ValueError(f"start points need {spec.dim} columns, got {X.shape[1]}")
    bad = np.flatnonzero(~is_feasible(spec, X))
    if bad.size:
        raise ValueError(f"start point rows {(bad + 1).tolist()} violate bounds or integrality")
    return X


def load_user_points(path, spec: ProblemSpec) -> np.ndarray:
    """Read start points from a text file: one whitespace/comma separated point per row."""
    with open(path) as fh:
        rows = [
            [float(tok) for tok in line.replace(",", " ").split()]
            for line in fh
            if line.strip() and not line.lstrip().startswith("#")
        ]
    return validate_user_points(spec, rows)


def build_design(
    strategy: str,
    n: int,
    spec: ProblemSpec,
    rng: np.random.Generator,
    user_points=None,
) -> DesignMatrix:
    """Dispatch on a design tag and append (deduplicated) user start points."""
    if strategy == "lhd":
        dm = latin_hypercube(n, spec, rng)
    elif strategy == "SLHD":
        dm = symmetric_lhd(n, spec, rng)
    elif strategy == "CORNER":
        dm = corner_design(n, spec, rng)
    else:
        raise ValueError(f"unknown design tag {strategy!r}; valid: {', '.join(DESIGN_TAGS)}")
    if user_points is None or len(user_points) == 0:
        return dm
    U = validate_user_points(spec, user_points)
    tol = spec.dedup_tol
    keep = []
    for u in U:
        existing = np.vstack([dm.points] + keep) if keep else dm.points
        if np.min(np.linalg.norm(existing - u, axis=1)) > tol:
            keep.append(u[None, :])
        else:
            logger.info("start point %s duplicates a design point; skipped", u.tolist())
    user = np.vstack(keep) if keep else np.empty((0, spec.dim))
    return DesignMatrix(dm.points, dm.strategy, user)
