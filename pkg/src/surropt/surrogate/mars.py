"""Multivariate adaptive regression splines.

Greedy forward pass over hinge pairs ``B_m(x) * max(0, +-(x_v - t))`` with
knots at data values, followed by a backward pass that prunes terms and
keeps the subset with the lowest generalized cross-validation score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# a hinge factor: (variable, knot, sign) -> max(0, sign * (x[variable] - knot))
Hinge = tuple[int, float, int]
Term = tuple[Hinge, ...]

_MAX_KNOTS = 50
_RTOL = 1e-10


def default_max_terms(d: int) -> int:
    return min(21, 2 * d + 1)


def eval_term(term: Term, X: np.ndarray) -> np.ndarray:
    out = np.ones(X.shape[0])
    for v, t, s in term:
        out *= np.maximum(0.0, s * (X[:, v] - t))
    return out


def basis_matrix(terms, X: np.ndarray) -> np.ndarray:
    return np.column_stack([eval_term(t, X) for t in terms])


def gcv(rss: float, n: int, n_terms: int, penalty: float) -> float:
    """RSS/n / (1 - C/n)^2 with C = M + penalty * (M - 1) / 2."""
    c = n_terms + penalty * (n_terms - 1) / 2.0
    if c >= n:
        return np.inf
    return (rss / n) / (1.0 - c / n) ** 2


def _lstsq_rss(B: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(B, f, rcond=None)
    r = f - B @ coef
    return coef, float(r @ r)


def _orthonormal_basis(B: np.ndarray) -> np.ndarray:
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    keep = s > _RTOL * max(s[0], 1e-300)
    return U[:, keep]


@dataclass(frozen=True)
class MarsModel:
    terms: tuple[Term, ...]
    coef: np.ndarray
    max_terms: int
    dim: int
    forward_terms: tuple[Term, ...] = ()
    gcv: float = np.nan
    forward_gcv: float = np.nan

    @property
    def n_hinge_terms(self) -> int:
        return sum(1 for t in self.terms if t)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} columns, got {X.shape[1]}")
        return basis_matrix(self.terms, X) @ self.coef


def _best_pair(Q, res, bm, x_cols, knots):
    """Largest RSS reduction over hinge pairs ``bm * max(0, +-(x - t))``.

    ``x_cols`` (n x K) holds, per candidate, the data column of its variable
    and ``knots`` (K,) the knot.  Returns (reduction, index, keep+, keep-).
    """
    H1 = bm[:, None] * np.maximum(0.0, x_cols - knots[None, :])
    H2 = bm[:, None] * np.maximum(0.0, knots[None, :] - x_cols)
    n1 = np.einsum("ij,ij->j", H1, H1)
    n2 = np.einsum("ij,ij->j", H2, H2)
    R1 = H1 - Q @ (Q.T @ H1)
    R2 = H2 - Q @ (Q.T @ H2)
    a = np.einsum("ij,ij->j", R1, R1)
    b = np.einsum("ij,ij->j", R1, R2)
    c = np.einsum("ij,ij->j", R2, R2)
    g1 = R1.T @ res
    g2 = R2.T @ res
    ok1 = a > _RTOL * np.maximum(n1, 1e-300)
    ok2 = c > _RTOL * np.maximum(n2, 1e-300)
    single1 = np.where(ok1, g1**2 / np.where(ok1, a, 1.0), 0.0)
    single2 = np.where(ok2, g2**2 / np.where(ok2, c, 1.0), 0.0)
    det = a * c - b * b
    both = ok1 & ok2 & (det > _RTOL * a * c)
    pair = np.where(
        both, (c * g1**2 - 2 * b * g1 * g2 + a * g2**2) / np.where(both, det, 1.0), 0.0
    )
    red = np.maximum(pair, np.maximum(single1, single2))
    # which hinges of the pair are worth keeping
    use1 = np.where(both, True, ok1 & (single1 >= single2))
    use2 = np.where(both, True, ok2 & (single2 > single1))
    k = int(np.argmax(red))
    return float(red[k]), k, bool(use1[k]), bool(use2[k])


def _candidate_knots(values: np.ndarray) -> np.ndarray:
    knots = np.unique(values)
    if knots.size > _MAX_KNOTS:
        knots = knots[np.unique(np.linspace(0, knots.size - 1, _MAX_KNOTS).round().astype(int))]
    return knots


def forward_pass(X, f, max_terms: int, max_interaction: int, penalty: float) -> list[Term]:
    n, d = X.shape
    terms: list[Term] = [()]
    B = np.ones((n, 1))
    tss = float(np.sum((f - f.mean()) ** 2))
    _, rss = _lstsq_rss(B, f)
    cur_gcv = gcv(rss, n, 1, penalty)
    while len(terms) + 1 <= max_terms and rss > 1e-24 * max(tss, 1e-300):
        Q = _orthonormal_basis(B)
        res = f - Q @ (Q.T @ f)
        best = (0.0, None)
        for m, term in enumerate(terms):
            if len(term) >= max_interaction:
                continue
            used = {v for v, _, _ in term}
            bm = B[:, m]
            active = bm > 0
            if not active.any():
                continue
            cand_v, cand_t = [], []
            for v in range(d):
                if v not in used:
                    knots = _candidate_knots(X[active, v])
                    cand_v.append(np.full(knots.size, v))
                    cand_t.append(knots)
            if not cand_v:
                continue
            vs, ts = np.concatenate(cand_v), np.concatenate(cand_t)
            red, k, use1, use2 = _best_pair(Q, res, bm, X[:, vs], ts)
            if red > best[0]:
                best = (red, (m, int(vs[k]), float(ts[k]), use1, use2))
        if best[1] is None or best[0] <= 1e-12 * rss:
            break
        m, v, t, use1, use2 = best[1]
        new = []
        if use1:
            new.append(terms[m] + ((v, t, 1),))
        if use2:
            new.append(terms[m] + ((v, t, -1),))
        if len(terms) + len(new) > max_terms:
            new = new[:1]
        B_new = np.column_stack([B] + [eval_term(t_, X) for t_ in new])
        _, rss_new = _lstsq_rss(B_new, f)
        new_gcv = gcv(rss_new, n, B_new.shape[1], penalty)
        if not new_gcv < cur_gcv:
            break
        terms.extend(new)
        B, rss, cur_gcv = B_new, rss_new, new_gcv
    return terms


def _removal_by_gram(B: np.ndarray, f: np.ndarray, rss: float):
    """Cheapest single-column removal (never column 0) via the inverse Gram
    matrix: removing column j raises RSS by coef_j^2 / inv(B^T B)_jj.

    Returns ``(new_rss, position)`` or ``None`` when B is near rank deficient.
    """
    G = B.T @ B
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diag(L)) ** 2 < 1e-10 * np.max(np.diag(G)):
        return None
    Ginv = np.linalg.inv(G)
    coef = Ginv @ (B.T @ f)
    delta = coef[1:] ** 2 / np.diag(Ginv)[1:]
    j = int(np.argmin(delta))
    return rss + float(delta[j]), j + 1


def backward_pass(X, f, terms: list[Term], penalty: float) -> tuple[list[int], float]:
    """Prune terms one at a time (lowest-RSS removal first); return the
    index subset with the lowest GCV.  The intercept is never removed."""
    n = X.shape[0]
    B = basis_matrix(terms, X)
    current = list(range(len(terms)))
    _, rss = _lstsq_rss(B, f)
    best_set, best_gcv = list(current), gcv(rss, n, len(current), penalty)
    while len(current) > 1:
        trial = _removal_by_gram(B[:, current], f, rss)
        if trial is None:
            for pos in range(1, len(current)):
                keep = current[:pos] + current[pos + 1 :]
                _, r = _lstsq_rss(B[:, keep], f)
                if trial is None or r < trial[0]:
                    trial = (r, pos)
        pos = trial[1]
        current = current[:pos] + current[pos + 1 :]
        _, rss = _lstsq_rss(B[:, current], f)
        g = gcv(rss, n, len(current), penalty)
        if g <= best_gcv:
            best_set, best_gcv = list(current), g
    return best_set, best_gcv


def fit_mars(
    points,
    values,
    max_terms: int | None = None,
    max_interaction: int = 2,
    penalty: float = 3.0,
) -> MarsModel:
    X = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(values, dtype=float).ravel()
    n, d = X.shape
    if f.size != n:
        raise ValueError(f"{n} points but {f.size} values")
    if n < d + 2:
        raise ValueError(f"MARS fit needs at least d + 2 = {d + 2} points, got {n}")
    if max_terms is None:
        max_terms = default_max_terms(d)
    terms = forward_pass(X, f, max_terms, max_interaction, penalty)
    B = basis_matrix(terms, X)
    _, rss_full = _lstsq_rss(B, f)
    forward_gcv = gcv(rss_full, n, len(terms), penalty)
    keep, best_gcv = backward_pass(X, f, terms, penalty)
    final = [terms[i] for i in keep]
    coef, _ = _lstsq_rss(B[:, keep], f)
    return MarsModel(
        tuple(final), coef, max_terms, d, tuple(terms), float(best_gcv), float(forward_gcv)
    )
