"""Surrogate models: RBF interpolants, regression polynomials, MARS and mixtures.

Models are immutable and expose ``predict(X)``.  :func:`fit_surrogate`
dispatches on the surrogate tags (``RBFcub``, ``POLYquad``, ``MIX_RcM``...).
"""

from __future__ import annotations

import json
from functools import partial

import numpy as np

from .ensemble import EnsembleModel, ds_weights, fit_ensemble
from .mars import MarsModel, fit_mars
from .poly import PolyModel, fit_poly, monomial_basis
from .rbf import RbfModel, fit_rbf

__all__ = [
    "RbfModel",
    "PolyModel",
    "MarsModel",
    "EnsembleModel",
    "fit_rbf",
    "fit_poly",
    "fit_mars",
    "fit_ensemble",
    "fit_surrogate",
    "predict",
    "dumps",
    "loads",
    "SURROGATE_TAGS",
    "MIXTURES",
    "ds_weights",
]

_SINGLE_FITS = {
    "RBFcub": partial(fit_rbf, kernel="cubic"),
    "RBFtps": partial(fit_rbf, kernel="thinplate"),
    "RBFlin": partial(fit_rbf, kernel="linear"),
    "MARS": fit_mars,
    "POLYlin": partial(fit_poly, variant="lin"),
    "POLYquad": partial(fit_poly, variant="quad"),
    "POLYquadr": partial(fit_poly, variant="quadr"),
    "POLYcub": partial(fit_poly, variant="cub"),
    "POLYcubr": partial(fit_poly, variant="cubr"),
}

MIXTURES = {
    "MIX_RcM": ("RBFcub", "MARS"),
    "MIX_RcPc": ("RBFcub", "POLYcub"),
    "MIX_RcPcr": ("RBFcub", "POLYcubr"),
    "MIX_RcPq": ("RBFcub", "POLYquad"),
    "MIX_RcPqr": ("RBFcub", "POLYquadr"),
    "MIX_RcPcM": ("RBFcub", "POLYcub", "MARS"),
}

SURROGATE_TAGS = tuple(_SINGLE_FITS) + tuple(MIXTURES)


def fit_surrogate(tag: str, points, values):
    """Fit the surrogate named by ``tag`` to (points, values)."""
    if tag in _SINGLE_FITS:
        return _SINGLE_FITS[tag](points, values)
    if tag in MIXTURES:
        return fit_ensemble(points, values, [(m, _SINGLE_FITS[m]) for m in MIXTURES[tag]])
    raise ValueError(f"unknown surrogate tag {tag!r}; valid: {', '.join(SURROGATE_TAGS)}")


def predict(model, X) -> np.ndarray:
    return model.predict(X)


def _to_dict(model) -> dict:
    if isinstance(model, RbfModel):
        return {
            "type": "rbf",
            "kernel": model.kernel,
            "centers": model.centers.tolist(),
            "lambda": model.lam.tolist(),
            "tail": model.tail.tolist(),
        }
    if isinstance(model, PolyModel):
        return {
            "type": "poly",
            "dim": model.dim,
            "variant": model.variant,
            "beta": model.beta.tolist(),
        }
    if isinstance(model, MarsModel):
        return {
            "type": "mars",
            "dim": model.dim,
            "max_terms": model.max_terms,
            "terms": [[list(h) for h in t] for t in model.terms],
            "coef": model.coef.tolist(),
        }
    if isinstance(model, EnsembleModel):
        return {
            "type": "ensemble",
            "tags": list(model.tags),
            "failed": list(model.failed),
            "weights": model.weights.tolist(),
            "members": [_to_dict(m) for m in model.members],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _from_dict(obj: dict):
    kind = obj["type"]
    if kind == "rbf":
        return RbfModel(
            np.array(obj["centers"], dtype=float),
            np.array(obj["lambda"], dtype=float),
            np.array(obj["tail"], dtype=float),
            obj["kernel"],
        )
    if kind == "poly":
        basis = monomial_basis(int(obj["dim"]), obj["variant"])
        return PolyModel(np.array(obj["beta"], dtype=float), obj["variant"], basis)
    if kind == "mars":
        terms = tuple(tuple((int(v), float(t), int(s)) for v, t, s in term) for term in obj["terms"])
        return MarsModel(terms, np.array(obj["coef"], dtype=float), obj["max_terms"], obj["dim"])
    if kind == "ensemble":
        return EnsembleModel(
            tuple(_from_dict(m) for m in obj["members"]),
            np.array(obj["weights"], dtype=float),
            tuple(obj["tags"]),
            tuple(obj.get("failed", ())),
        )
    raise ValueError(f"unknown model type {kind!r}")


def dumps(model) -> str:
    """JSON text of a fitted model; floats round-trip exactly."""
    return json.dumps(_to_dict(model), indent=1)


def loads(text: str):
    return _from_dict(json.loads(text))
