"""Sample point selection: randomized candidate search and surrogate minimization.

``CANDloc`` perturbs the incumbent; ``CANDglob`` adds uniformly drawn
candidates.  Candidates are scored by a weighted sum of the scaled surrogate
prediction and the scaled distance to already evaluated points, the weight
cycling through ``WEIGHT_PATTERN``.  ``SurfMin`` evaluates a local minimizer
of the surrogate, or the maximin point when that minimizer is already known.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .problem import ProblemSpec

logger = logging.getLogger(__name__)

SAMPLING_TAGS = ("CANDloc", "CANDglob", "SurfMin")
WEIGHT_PATTERN = (1.0, 0.75, 0.5, 0.25, 0.0)
CONT_RHO = (0.2, 0.1, 0.05)
INT_RHO = (1, 2, 3)
MAX_REDUCTIONS = 5
SUCCESS_THRESHOLD = 3

_CHUNK = 4096


@dataclass(frozen=True)
class SamplerState:
    cycle_pos: int = 0
    fail_count: int = 0
    success_count: int = 0
    sigma: float = 1.0
    reduction_count: int = 0
    halving_due: bool = False

    def as_dict(self) -> dict:
        return {
            "cycle_pos": self.cycle_pos,
            "fail_count": self.fail_count,
            "success_count": self.success_count,
            "sigma": self.sigma,
            "reduction_count": self.reduction_count,
            "halving_due": self.halving_due,
        }


@dataclass
class CandidateSet:
    points: np.ndarray
    groups: np.ndarray = field(default=None)
    n_generated: int = 0

    def __post_init__(self):
        if self.groups is None:
            self.groups = np.zeros(len(self.points), dtype="<U12")
        if not self.n_generated:
            self.n_generated = len(self.points)

    def __len__(self):
        return len(self.points)

    def subset(self, mask) -> "CandidateSet":
        return CandidateSet(self.points[mask], self.groups[mask], self.n_generated)

    def group_sizes(self) -> dict[str, int]:
        labels, counts = np.unique(self.groups, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))


def perturbation_probability(d: int) -> float:
    """Per-coordinate perturbation probability: max(0.1, 5/d) for d > 5, else 1."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return max(0.1, 5.0 / d) if d > 5 else 1.0


def min_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distance from each row of A to its nearest row of B (inf if B is empty)."""
    if len(B) == 0:
        return np.full(len(A), np.inf)
    out = np.empty(len(A))
    for s in range(0, len(A), _CHUNK):
        out[s : s + _CHUNK] = cdist(A[s : s + _CHUNK], B).min(axis=1)
    return out


def _select_coordinates(n: int, coords: np.ndarray, prob: float, rng) -> np.ndarray:
    """Bernoulli mask over ``coords``; rows with nothing selected get one random coordinate."""
    d = coords.size
    mask = rng.random((n, d)) < prob
    empty = ~mask.any(axis=1)
    if empty.any():
        mask[empty, rng.integers(d, size=int(empty.sum()))] = True
    return mask


def _perturb(best, spec: ProblemSpec, coords, n, sigma, rng, prob) -> np.ndarray:
    """Perturb ``coords`` of ``best`` in ``n`` copies, each coordinate by its type's rule."""
    X = np.tile(np.asarray(best, dtype=float), (n, 1))
    mask = _select_coordinates(n, coords, prob, rng)
    int_mask = spec.int_mask[coords]
    phi = rng.standard_normal((n, coords.size))
    if (~int_mask).any():
        r = float(np.min(spec.widths[spec.cont_idx]))
        rho = rng.choice(CONT_RHO, size=n)
        step = r * rho[:, None] * sigma * phi
        sel = mask & ~int_mask
        X[:, coords] += np.where(sel, step, 0.0)
    if int_mask.any():
        rho = rng.choice(INT_RHO, size=n)
        offset = np.round(rho[:, None] * sigma * phi)
        sign = np.where(phi >= 0, 1.0, -1.0)
        offset = np.where(offset == 0, sign, offset)
        sel = mask & int_mask
        X[:, coords] += np.where(sel, offset, 0.0)
    return spec.round_feasible(X)


def uniform_points(spec: ProblemSpec, n: int, rng) -> np.ndarray:
    X = spec.lower + rng.random((n, spec.dim)) * spec.widths
    if spec.integer_idx:
        ii = list(spec.integer_idx)
        X[:, ii] = rng.integers(spec.lower[ii], spec.upper[ii] + 1, size=(n, len(ii)))
    return X


def discard_close(cands: CandidateSet, evaluated, spec: ProblemSpec) -> CandidateSet:
    """Drop candidates within the dedup tolerance (exact coincidence for pure integer)."""
    if evaluated is None or len(evaluated) == 0 or len(cands) == 0:
        return cands
    dist = min_distances(cands.points, np.atleast_2d(evaluated))
    return cands.subset(dist > spec.dedup_tol)


def _groups(best, spec: ProblemSpec, mode: str, sigma: float, rng):
    d = spec.dim
    prob = perturbation_probability(d)
    cont, ints = spec.cont_idx, np.asarray(spec.integer_idx, dtype=int)
    kind = spec.kind
    if kind == "mixed":
        size = 125 * d
        plan = [("pert-cont", cont), ("pert-int", ints), ("pert-all", np.arange(d))]
    else:
        size = 500 * (spec.n_cont if kind == "continuous" else spec.n_int)
        plan = [("pert-int" if kind == "integer" else "pert-cont", np.arange(d))]
    out = [(label, _perturb(best, spec, coords, size, sigma, rng, prob)) for label, coords in plan]
    if mode == "global":
        out.append(("uniform", uniform_points(spec, size, rng)))
    elif mode != "local":
        raise ValueError(f"mode must be 'local' or 'global', got {mode!r}")
    return out


def generate_candidates(
    best, spec: ProblemSpec, mode: str, state: SamplerState, rng, evaluated=None
) -> CandidateSet:
    """Candidate points around ``best`` (plus uniform points in global mode).

    Group sizes before filtering: 500*d1 (continuous), 500*d2 (integer) or
    125*(d1 + d2) per group (mixed).  When ``evaluated`` is given, candidates
    too close to it are discarded; if none survive, one regeneration is tried.
    """
    for attempt in range(2):
        groups = _groups(best, spec, mode, state.sigma, rng)
        pts = np.vstack([g for _, g in groups])
        labels = np.concatenate([np.full(len(g), label, dtype="<U12") for label, g in groups])
        cands = CandidateSet(pts, labels, len(pts))
        filtered = discard_close(cands, evaluated, spec)
        if len(filtered) or evaluated is None:
            return filtered
    warnings.warn("every candidate point was too close to an evaluated point", stacklevel=2)
    return filtered


def _check_kind(spec: ProblemSpec, kind: str):
    if spec.kind != kind:
        raise ValueError(f"expected a {kind} problem, got {spec.kind}")


def gen_candidates_continuous(best, spec, mode, state, rng, evaluated=None) -> CandidateSet:
    _check_kind(spec, "continuous")
    return generate_candidates(best, spec, mode, state, rng, evaluated)


def gen_candidates_integer(best, spec, mode, state, rng, evaluated=None) -> CandidateSet:
    _check_kind(spec, "integer")
    return generate_candidates(best, spec, mode, state, rng, evaluated)


def gen_candidates_mixed(best, spec, mode, state, rng, evaluated=None) -> CandidateSet:
    _check_kind(spec, "mixed")
    return generate_candidates(best, spec, mode, state, rng, evaluated)


def _scale_unit(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.ones_like(v)
    return (v - lo) / (hi - lo)


@dataclass(frozen=True)
class Selection:
    points: np.ndarray
    weights: tuple[float, ...]
    state: SamplerState


def score_and_select(
    cands: CandidateSet,
    model,
    evaluated,
    state: SamplerState,
    batch: int = 1,
    tol: float = 0.0,
) -> Selection:
    """Pick ``batch`` candidates by the weighted response-surface/distance score.

    Each pick uses the next weight of the cycle.  Distances are updated
    with the points already picked for this batch, and candidates within
    ``tol`` of a picked point leave the pool.
    """
    pts = cands.points
    if len(pts) == 0:
        raise ValueError("no candidate points to select from")
    pred = np.asarray(model.predict(pts), dtype=float)
    dist = min_distances(pts, np.atleast_2d(evaluated))
    alive = np.ones(len(pts), dtype=bool)
    chosen, weights = [], []
    pos = state.cycle_pos
    for _ in range(batch):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            warnings.warn(
                f"only {len(chosen)} of {batch} points could be selected", stacklevel=2
            )
            break
        w_r = WEIGHT_PATTERN[pos % len(WEIGHT_PATTERN)]
        pos = (pos + 1) % len(WEIGHT_PATTERN)
        s_r = _scale_unit(pred[idx])
        delta = dist[idx]
        lo, hi = delta.min(), delta.max()
        s_d = np.ones_like(delta) if hi == lo else (hi - delta) / (hi - lo)
        score = w_r * s_r + (1.0 - w_r) * s_d
        pick = idx[int(np.argmin(score))]
        chosen.append(pts[pick])
        weights.append(w_r)
        alive[pick] = False
        d_new = np.linalg.norm(pts - pts[pick], axis=1)
        alive &= d_new > tol
        dist = np.minimum(dist, d_new)
    return Selection(np.array(chosen).reshape(-1, pts.shape[1]), tuple(weights), replace(state, cycle_pos=pos))


def maximin_point(evaluated, spec: ProblemSpec, rng, n_samples: int | None = None) -> np.ndarray:
    """Best of 1000*d uniform feasible points by distance to the nearest evaluated point."""
    n = n_samples or 1000 * spec.dim
    U = uniform_points(spec, n, rng)
    return U[int(np.argmax(min_distances(U, np.atleast_2d(evaluated))))]


def _too_close(x, evaluated, spec: ProblemSpec) -> bool:
    return bool(min_distances(x[None, :], np.atleast_2d(evaluated))[0] <= spec.dedup_tol)


def _local_descent(model, spec: ProblemSpec, rng, n_starts: int = 3) -> np.ndarray:
    bounds = list(zip(spec.lower, spec.upper))

    def fun(x):
        return float(model.predict(x[None, :])[0])

    best_x, best_f = None, np.inf
    for x0 in uniform_points(spec, n_starts, rng):
        res = minimize(fun, x0, method="L-BFGS-B", bounds=bounds)
        x = np.clip(res.x, spec.lower, spec.upper)
        fx = fun(x)
        if np.isfinite(fx) and fx < best_f:
            best_x, best_f = x, fx
    if best_x is None:
        raise RuntimeError("local descent on the surrogate failed")
    return best_x


def _mutate(X, spec: ProblemSpec, rng, rate: float) -> np.ndarray:
    n, d = X.shape
    mask = rng.random((n, d)) < rate
    step = 0.1 * spec.widths * rng.standard_normal((n, d))
    if spec.integer_idx:
        ii = list(spec.integer_idx)
        istep = np.round(step[:, ii])
        istep = np.where(istep == 0, rng.choice((-1.0, 1.0), size=istep.shape), istep)
        step[:, ii] = istep
    return spec.round_feasible(X + np.where(mask, step, 0.0))


def evolutionary_search(
    model, spec: ProblemSpec, rng, pop_per_dim: int = 20, generations: int = 50
) -> np.ndarray:
    """(mu + lambda) evolutionary minimization of the surrogate on the feasible lattice.

    Binary tournament selection, uniform crossover and Gaussian mutation
    rounded on integer coordinates.
    """
    pop_size = pop_per_dim * spec.dim
    pop = uniform_points(spec, pop_size, rng)
    fit = model.predict(pop)
    rate = 1.0 / spec.dim
    for _ in range(generations):
        a, b = rng.integers(pop_size, size=(2, pop_size)), rng.integers(pop_size, size=(2, pop_size))
        p1 = np.where(fit[a[0]] <= fit[a[1]], a[0], a[1])
        p2 = np.where(fit[b[0]] <= fit[b[1]], b[0], b[1])
        cross = rng.random((pop_size, spec.dim)) < 0.5
        kids = _mutate(np.where(cross, pop[p1], pop[p2]), spec, rng, rate)
        kid_fit = model.predict(kids)
        allx = np.vstack([pop, kids])
        allf = np.concatenate([fit, kid_fit])
        order = np.argsort(allf, kind="stable")[:pop_size]
        pop, fit = allx[order], allf[order]
    return pop[0]


def surfmin_point(model, spec: ProblemSpec, evaluated, rng) -> tuple[np.ndarray, bool]:
    """A (local) surrogate minimizer, or the maximin point if it is too close
    to an evaluated point.  Returns ``(point, used_fallback)``."""
    try:
        if spec.kind == "continuous":
            x = _local_descent(model, spec, rng)
        else:
            x = evolutionary_search(model, spec, rng)
        x = spec.round_feasible(x)
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        logger.debug("surrogate minimization failed (%s); using maximin point", exc)
        return maximin_point(evaluated, spec, rng), True
    if _too_close(x, evaluated, spec):
        return maximin_point(evaluated, spec, rng), True
    return x, False
