"""Model mixtures weighted by Dempster-Shafer evidence combination.

Each member's cross-validated predictions yield three pieces of evidence
(correlation with the data, RMSE, maximum absolute error).  Each piece is
normalized into a basic probability assignment over the members, discounted
so that some mass stays on the whole frame, and the assignments are combined
with Dempster's rule.  The pignistic probabilities of the combined
assignment are the mixture weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..exceptions import NumericalError

logger = logging.getLogger(__name__)

# reliability of each evidence source; 1 - DISCOUNT stays on the full frame
DISCOUNT = 0.9
LOO_MAX_POINTS = 50
N_FOLDS = 10


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple
    weights: np.ndarray
    tags: tuple[str, ...]
    failed: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} columns, got {X.shape[1]}")
        out = np.zeros(X.shape[0])
        for w, m in zip(self.weights, self.members):
            if w > 0:
                out += w * m.predict(X)
        return out


def dempster_combine(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Dempster's rule for assignments on singletons plus the full frame.

    Each array has N + 1 entries: masses of the N singletons, then the mass
    of the whole frame.

    :raises ValueError: total conflict
    """
    s1, t1 = m1[:-1], m1[-1]
    s2, t2 = m2[:-1], m2[-1]
    single = s1 * s2 + s1 * t2 + t1 * s2
    frame = t1 * t2
    total = single.sum() + frame
    if total <= 0:
        raise ValueError("evidence sources are in total conflict")
    return np.append(single, frame) / total


def pignistic(m: np.ndarray) -> np.ndarray:
    n = m.size - 1
    p = m[:-1] + m[-1] / n
    return p / p.sum()


def bpa_from_scores(scores: np.ndarray, discount: float = DISCOUNT) -> np.ndarray:
    """Normalize non-negative "larger is better" scores into a discounted assignment."""
    scores = np.clip(np.asarray(scores, dtype=float), 0.0, None)
    total = scores.sum()
    if not np.isfinite(total) or total <= 0:
        share = np.full(scores.size, 1.0 / scores.size)
    else:
        share = scores / total
    return np.append(discount * share, 1.0 - discount)


def cv_predictions(fit: Callable, X: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Leave-one-out predictions for n <= 50, otherwise 10-fold (fold i = rows i::10)."""
    n = X.shape[0]
    n_folds = n if n <= LOO_MAX_POINTS else N_FOLDS
    pred = np.empty(n)
    for k in range(n_folds):
        test = np.arange(k, n, n_folds)
        train = np.setdiff1d(np.arange(n), test)
        pred[test] = fit(X[train], f[train]).predict(X[test])
    return pred


def cv_statistics(pred: np.ndarray, f: np.ndarray) -> tuple[float, float, float]:
    err = pred - f
    rmse = float(np.sqrt(np.mean(err**2)))
    maxae = float(np.max(np.abs(err)))
    if np.std(pred) > 0 and np.std(f) > 0:
        cc = float(np.corrcoef(pred, f)[0, 1])
    else:
        cc = 0.0
    return cc, rmse, maxae


def ds_weights(stats: Sequence[tuple[float, float, float]], scale: float = 1.0) -> np.ndarray:
    """Combine per-member (cc, rmse, maxae) evidence into convex weights."""
    stats = np.asarray(stats, dtype=float)
    if len(stats) == 1:
        return np.ones(1)
    eps = 1e-12 * max(scale, 1e-300)
    sources = [
        bpa_from_scores(stats[:, 0]),
        bpa_from_scores(1.0 / (stats[:, 1] + eps)),
        bpa_from_scores(1.0 / (stats[:, 2] + eps)),
    ]
    m = sources[0]
    for src in sources[1:]:
        m = dempster_combine(m, src)
    w = pignistic(m)
    return w / w.sum()


_FIT_ERRORS = (ValueError, NumericalError, np.linalg.LinAlgError)


def fit_ensemble(points, values, member_fits: Sequence[tuple[str, Callable]]) -> EnsembleModel:
    """Fit every member on all data and weight the survivors by evidence.

    ``member_fits`` is a sequence of ``(tag, fit(points, values) -> model)``.
    A member whose full fit or any cross-validation fit fails gets weight 0.

    :raises NumericalError: if every member fails
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(values, dtype=float).ravel()
    fitted, stats, tags, failed = [], [], [], []
    for tag, fit in member_fits:
        try:
            model = fit(X, f)
            pred = cv_predictions(fit, X, f)
        except _FIT_ERRORS as exc:
            logger.debug("mixture member %s dropped: %s", tag, exc)
            failed.append(tag)
            continue
        if not np.all(np.isfinite(pred)):
            logger.debug("mixture member %s dropped: non-finite CV predictions", tag)
            failed.append(tag)
            continue
        fitted.append(model)
        stats.append(cv_statistics(pred, f))
        tags.append(tag)
    if not fitted:
        raise NumericalError(
            "every mixture member failed to fit: " + ", ".join(t for t, _ in member_fits)
        )
    scale = float(np.max(np.abs(f))) + 1.0
    weights = ds_weights(stats, scale)
    return EnsembleModel(tuple(fitted), weights, tuple(tags), tuple(failed))
