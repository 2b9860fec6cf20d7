"""Radial basis function interpolants with a linear polynomial tail."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from ..exceptions import NumericalError

KERNELS = ("cubic", "thinplate", "linear")

# condition-number ceiling for the (equilibrated) augmented system
COND_LIMIT = 1e12


def phi(r, kernel: str):
    """Kernel value for distances ``r``; thin-plate uses phi(0) = 0."""
    r = np.asarray(r, dtype=float)
    if kernel == "cubic":
        return r**3
    if kernel == "linear":
        return r.copy()
    if kernel == "thinplate":
        out = np.zeros_like(r)
        pos = r > 0
        out[pos] = r[pos] ** 2 * np.log(r[pos])
        return out
    raise ValueError(f"unknown kernel {kernel!r}; valid: {', '.join(KERNELS)}")


@dataclass(frozen=True)
class RbfModel:
    """s(x) = sum_i lambda_i phi(|x - c_i|) + tail[0] + tail[1:] . x"""

    centers: np.ndarray
    lam: np.ndarray
    tail: np.ndarray
    kernel: str

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} columns, got {X.shape[1]}")
        Phi = phi(cdist(X, self.centers), self.kernel)
        return Phi @ self.lam + self.tail[0] + X @ self.tail[1:]


def fit_rbf(points, values, kernel: str = "cubic") -> RbfModel:
    """Solve the augmented interpolation system.

    ``[Phi P; P^T 0] [lam; c] = [f; 0]`` with ``P = [1, X]``.  The matrix is
    symmetrically equilibrated before the condition estimate and solve.

    :raises ValueError: fewer than d + 1 points or mismatched shapes
    :raises NumericalError: rank-deficient tail or ill-conditioned system
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(values, dtype=float).ravel()
    n, d = X.shape
    if f.size != n:
        raise ValueError(f"{n} points but {f.size} values")
    if n < d + 1:
        raise ValueError(f"RBF fit needs at least d + 1 = {d + 1} points, got {n}")
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; valid: {', '.join(KERNELS)}")

    P = np.hstack([np.ones((n, 1)), X])
    if np.linalg.matrix_rank(P) < d + 1:
        raise NumericalError(
            f"polynomial tail is rank deficient: the {n} points lie in a lower-dimensional "
            "affine subspace"
        )
    A = np.zeros((n + d + 1, n + d + 1))
    A[:n, :n] = phi(cdist(X, X), kernel)
    A[:n, n:] = P
    A[n:, :n] = P.T
    rhs = np.concatenate([f, np.zeros(d + 1)])

    scale = np.max(np.abs(A), axis=1)
    scale[scale == 0] = 1.0
    D = 1.0 / np.sqrt(scale)
    As = A * D[:, None] * D[None, :]
    cond = np.linalg.cond(As)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(
            f"RBF system is ill-conditioned (cond ~ {cond:.3g} > {COND_LIMIT:.0e}); "
            "some of the points nearly coincide"
        )
    sol = D * scipy.linalg.solve(As, D * rhs, assume_a="sym")
    return RbfModel(X.copy(), sol[:n], sol[n:], kernel)
