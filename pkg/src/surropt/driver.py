"""The optimization loop: design, batch evaluation, fit, sample, adapt, restart."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import design as _design
from .exceptions import ConfigError, ObjectiveError
from .problem import EvaluationRecord, ProblemSpec, evaluate
from .sampling import (
    MAX_REDUCTIONS,
    SAMPLING_TAGS,
    SUCCESS_THRESHOLD,
    SamplerState,
    generate_candidates,
    maximin_point,
    score_and_select,
    surfmin_point,
)
from .surrogate import SURROGATE_TAGS, EnsembleModel, fit_surrogate

logger = logging.getLogger(__name__)


@dataclass
class DriverOptions:
    """Run options; ``None`` fields get defaults from :meth:`resolved`."""

    max_evals: int = 200
    surrogate: str = "MIX_RcM"
    sampling: str = "CANDglob"
    design: str = "SLHD"
    design_size: int | None = None
    start_points: np.ndarray | None = None
    batch: int = 1
    seed: int | None = None
    workers: int = 1
    trace: bool = True

    def resolved(self, spec: ProblemSpec) -> "DriverOptions":
        if self.surrogate not in SURROGATE_TAGS:
            raise ConfigError(
                f"unknown surrogate {self.surrogate!r}; valid: {', '.join(SURROGATE_TAGS)}"
            )
        if self.sampling not in SAMPLING_TAGS:
            raise ConfigError(
                f"unknown sampling {self.sampling!r}; valid: {', '.join(SAMPLING_TAGS)}"
            )
        if self.design not in _design.DESIGN_TAGS:
            raise ConfigError(
                f"unknown design {self.design!r}; valid: {', '.join(_design.DESIGN_TAGS)}"
            )
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        n_min = _design.min_design_size(self.surrogate, spec.dim)
        size = self.design_size
        if size is None:
            size = _design.default_design_size(self.surrogate, spec.dim)
            if self.design == "CORNER" and spec.dim < 60:
                size = min(size, 2**spec.dim + 1)
        if size < n_min:
            raise ConfigError(
                f"design size {size} is below the minimum {n_min} for {self.surrogate} in d={spec.dim}"
            )
        n_start = 0 if self.start_points is None else len(self.start_points)
        if self.max_evals < size + n_start:
            raise ConfigError(
                f"budget {self.max_evals} is smaller than one initial design ({size + n_start} points)"
            )
        return replace(self, design_size=size)


@dataclass
class RunResult:
    best_point: np.ndarray
    best_value: float
    history: list[EvaluationRecord]
    epochs: list[dict]
    state_trace: list[dict] = field(default_factory=list)
    fit_log: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)

    @property
    def n_evals(self) -> int:
        return len(self.history)

    @property
    def n_restarts(self) -> int:
        return sum(1 for e in self.epochs if e["reason"] == "restart")

    @property
    def X(self) -> np.ndarray:
        return np.array([r.point for r in self.history])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.history])


def update_counters(state: SamplerState, improved: bool, d: int) -> SamplerState:
    """Advance the success/failure counters after one trial.

    More than 3 consecutive successes double sigma (capped at 1); more than
    max(5, d) consecutive failures halve it.  When 5 reductions have
    happened already, the demanded halving is flagged instead so the caller
    can restart.
    """
    if improved:
        succ = state.success_count + 1
        sigma = state.sigma
        if succ > SUCCESS_THRESHOLD:
            sigma, succ = min(1.0, 2.0 * sigma), 0
        return replace(state, success_count=succ, fail_count=0, sigma=sigma, halving_due=False)
    fail = state.fail_count + 1
    if fail > max(5, d):
        if state.reduction_count >= MAX_REDUCTIONS:
            return replace(state, fail_count=fail, success_count=0, halving_due=True)
        return replace(
            state,
            fail_count=0,
            success_count=0,
            sigma=0.5 * state.sigma,
            reduction_count=state.reduction_count + 1,
            halving_due=False,
        )
    return replace(state, fail_count=fail, success_count=0, halving_due=False)


def should_restart(state: SamplerState) -> bool:
    """True once a halving is demanded beyond the allowed number of reductions."""
    return state.halving_due and state.reduction_count >= MAX_REDUCTIONS


def evaluate_batch(spec: ProblemSpec, points, workers: int = 1) -> np.ndarray:
    """Evaluate rows of ``points`` with up to ``workers`` in flight; results keep input order."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if len(X) == 0:
        return np.empty(0)

    def one(x):
        try:
            return evaluate(spec, x)
        except ObjectiveError as exc:
            raise ObjectiveError(f"evaluation failed at point {x.tolist()}: {exc}") from exc

    if workers <= 1 or len(X) == 1:
        return np.array([one(x) for x in X])
    with ThreadPoolExecutor(max_workers=min(workers, len(X))) as pool:
        return np.array(list(pool.map(one, X)))


class _Run:
    """Mutable bookkeeping for one call of :func:`optimize`."""

    def __init__(self, spec: ProblemSpec, opts: DriverOptions):
        self.spec = spec
        self.opts = opts
        self.history: list[EvaluationRecord] = []
        self.epochs: list[dict] = []
        self.trace: list[dict] = []
        self.fit_log: list[tuple[int, tuple[int, ...]]] = []
        self.best_value = np.inf
        self.best_point = None

    @property
    def remaining(self) -> int:
        return self.opts.max_evals - len(self.history)

    def record(self, X, values, epoch, w_r=None, sigma=None, elapsed=0.0):
        per_point = elapsed / max(len(X), 1)
        for i, (x, v) in enumerate(zip(X, values)):
            if v < self.best_value:
                self.best_value, self.best_point = float(v), x.copy()
            self.history.append(
                EvaluationRecord(
                    point=x.copy(),
                    value=float(v),
                    eval_index=len(self.history) + 1,
                    epoch=epoch,
                    wall_time=per_point,
                    best_so_far=self.best_value,
                    w_r=None if w_r is None else w_r[i],
                    sigma=sigma,
                )
            )

    def evaluate(self, X, epoch, w_r=None, sigma=None) -> np.ndarray:
        t0 = time.perf_counter()
        values = evaluate_batch(self.spec, X, self.opts.workers)
        self.record(X, values, epoch, w_r, sigma, time.perf_counter() - t0)
        return values


def _affine_rank(X: np.ndarray) -> int:
    return int(np.linalg.matrix_rank(np.hstack([np.ones((len(X), 1)), X])))


def _draw_design(spec: ProblemSpec, opts: DriverOptions, n: int, user, rng, attempts: int = 20):
    """Initial design whose points span the box affinely when they can.

    Small symmetric designs occasionally have one column equal to another
    (or to its reflection), which leaves a linear tail unidentifiable; such
    draws are repeated.
    """
    target = min(spec.dim + 1, n + (0 if user is None else len(user)))
    for _ in range(attempts):
        X = _design.build_design(opts.design, n, spec, rng, user_points=user).all_points
        if _affine_rank(X) >= target:
            return X
    logger.warning("initial design is affinely degenerate after %d draws", attempts)
    return X


def _select(run: _Run, model, Xe, best, state, p, rng):
    """Choose ``p`` new points; returns (points, w_R list or None, new state)."""
    spec, opts = run.spec, run.opts
    if opts.sampling == "SurfMin":
        x, _ = surfmin_point(model, spec, Xe, rng)
        pts = [x]
        for _ in range(p - 1):
            pts.append(maximin_point(np.vstack([Xe] + [q[None, :] for q in pts]), spec, rng))
        return np.array(pts), None, state
    mode = "global" if opts.sampling == "CANDglob" else "local"
    cands = generate_candidates(best, spec, mode, state, rng, evaluated=Xe)
    if len(cands) == 0:
        return maximin_point(Xe, spec, rng)[None, :], None, state
    sel = score_and_select(cands, model, Xe, state, p, tol=spec.dedup_tol)
    return sel.points, list(sel.weights), sel.state


def optimize(spec: ProblemSpec, opts: DriverOptions | None = None) -> RunResult:
    """Minimize ``spec.objective`` within ``opts.max_evals`` evaluations.

    Each epoch starts from a fresh design and sampler state; surrogates are
    fitted on the current epoch's points only.  The reported incumbent is
    global over all epochs.
    """
    opts = (opts or DriverOptions()).resolved(spec)
    rng = np.random.default_rng(opts.seed)
    run = _Run(spec, opts)
    n_min = _design.min_design_size(opts.surrogate, spec.dim)
    d = spec.dim
    epoch = 0
    reason = "initial"

    while run.remaining > 0:
        n0 = min(opts.design_size, run.remaining)
        user = opts.start_points if epoch == 0 else None
        Xd = _draw_design(spec, opts, n0, user, rng)[: run.remaining]
        if len(Xd) < n_min:
            raise ConfigError(
                f"initial design has only {len(Xd)} distinct points; {opts.surrogate} needs {n_min}"
            )
        run.epochs.append({"epoch": epoch, "start_eval": len(run.history) + 1, "reason": reason})
        logger.info("epoch %d: evaluating %d design points", epoch, len(Xd))
        start = len(run.history)
        Fd = run.evaluate(Xd, epoch, sigma=1.0)
        Xe, Fe = Xd.copy(), Fd.copy()
        state = SamplerState()
        restart = False

        while run.remaining > 0:
            model = fit_surrogate(opts.surrogate, Xe, Fe)
            run.fit_log.append((epoch, tuple(range(start + 1, start + len(Xe) + 1))))
            ibest = int(np.argmin(Fe))
            p = min(opts.batch, run.remaining)
            Xn, w_r, state = _select(run, model, Xe, Xe[ibest], state, p, rng)
            Fn = run.evaluate(Xn, epoch, w_r=w_r, sigma=state.sigma)
            improved = bool(np.min(Fn) < Fe[ibest])
            Xe, Fe = np.vstack([Xe, Xn]), np.concatenate([Fe, Fn])
            state = update_counters(state, improved, d)
            if opts.trace:
                entry = {"epoch": epoch, "eval": len(run.history), "improved": improved}
                entry.update(state.as_dict())
                if w_r is not None:
                    entry["w_r"] = w_r
                if isinstance(model, EnsembleModel):
                    entry["weights"] = model.weights.tolist()
                    entry["members"] = list(model.tags)
                run.trace.append(entry)
            if should_restart(state):
                if run.remaining >= n_min:
                    logger.info("epoch %d: restart after %d evaluations", epoch, len(run.history))
                    restart = True
                    break
                # too little budget left for a fresh design: keep searching this epoch
                state = replace(state, fail_count=0, halving_due=False)
        if not restart:
            break
        epoch += 1
        reason = "restart"

    return RunResult(
        best_point=run.best_point,
        best_value=run.best_value,
        history=run.history,
        epochs=run.epochs,
        state_trace=run.trace,
        fit_log=run.fit_log,
    )
