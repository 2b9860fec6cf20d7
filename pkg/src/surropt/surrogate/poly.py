"""Least-squares regression polynomials (full and reduced variants)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

VARIANTS = ("lin", "quad", "quadr", "cub", "cubr")


def monomial_basis(d: int, variant: str) -> tuple[tuple[int, ...], ...]:
    """Exponent vectors of the basis, constant term first.

    lin: 1, x_i; quad: all monomials of degree <= 2; quadr: 1, x_i, x_i^2;
    cub: all monomials of degree <= 3; cubr: 1, x_i, x_i^2, x_i^3.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown polynomial variant {variant!r}; valid: {', '.join(VARIANTS)}")

    def unit(i, p):
        e = [0] * d
        e[i] = p
        return tuple(e)

    basis = [tuple([0] * d)]
    if variant in ("lin", "quad", "cub"):
        degree = {"lin": 1, "quad": 2, "cub": 3}[variant]
        for deg in range(1, degree + 1):
            for combo in itertools.combinations_with_replacement(range(d), deg):
                e = [0] * d
                for i in combo:
                    e[i] += 1
                basis.append(tuple(e))
    else:
        degree = 2 if variant == "quadr" else 3
        for p in range(1, degree + 1):
            basis.extend(unit(i, p) for i in range(d))
    return tuple(basis)


def design_matrix(X, basis) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    E = np.asarray(basis, dtype=int)
    # product over coordinates of x_j ** e_j, one column per monomial
    return np.prod(X[:, None, :] ** E[None, :, :], axis=2)


@dataclass(frozen=True)
class PolyModel:
    beta: np.ndarray
    variant: str
    basis: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.basis[0])

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} columns, got {X.shape[1]}")
        return design_matrix(X, self.basis) @ self.beta


def fit_poly(points, values, variant: str = "quad") -> PolyModel:
    """Minimum-norm least-squares fit over the variant's monomial basis."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(values, dtype=float).ravel()
    if f.size != X.shape[0]:
        raise ValueError(f"{X.shape[0]} points but {f.size} values")
    basis = monomial_basis(X.shape[1], variant)
    A = design_matrix(X, basis)
    beta, *_ = np.linalg.lstsq(A, f, rcond=None)
    return PolyModel(beta, variant, basis)
