"""Cost-sensitive linear SVM without intercept, solved by dual coordinate descent.

Primal::

    min_w  0.5 ||w||^2 + C+ sum_{y_i=+1} xi_i + C- sum_{y_i=-1} xi_i
    s.t.   y_i w.x_i >= 1 - xi_i,  xi_i >= 0

Dual: ``min 0.5 a'Qa - sum(a)`` with ``Q_ij = y_i y_j x_i.x_j`` and the
per-class box ``0 <= a_i <= C_{y_i}``; the primal solution is
``w = sum_i a_i y_i x_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateTrainingSetError
from .netio import SparseVector

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 1_000_000


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SVMConfig:
    """``c_pos=None`` means ``|L-| / |L+|`` at training time."""

    c_pos: float | None = None
    c_neg: float = 1.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    fit_intercept: bool = False

    def costs(self, n_pos: int, n_neg: int) -> tuple[float, float]:
        c_pos = self.c_pos if self.c_pos is not None else n_neg / n_pos
        return float(c_pos), float(self.c_neg)


def default_costs(n_pos: int, n_neg: int) -> tuple[float, float]:
    return n_neg / n_pos, 1.0


@dataclass(frozen=True)
class Hyperplane:
    w: np.ndarray
    c_pos: float
    c_neg: float
    tol: float
    max_iter: int
    bias: float = 0.0
    alpha: np.ndarray = field(default=None, repr=False)
    primal: float = float("nan")
    dual: float = float("nan")
    n_updates: int = 0
    converged: bool = True

    def __post_init__(self):
        if not (self.c_pos > 0 and self.c_neg > 0):
            raise ValueError("misclassification costs must be positive")
        if not np.all(np.isfinite(self.w)):
            raise ValueError("non-finite weights")

    @property
    def gap(self) -> float:
        return self.primal - self.dual

    def decision(self, X) -> np.ndarray:
        """Signed decision values for sparse or dense rows."""
        if sp.issparse(X):
            return np.asarray(X @ self.w).ravel() + self.bias
        return np.asarray(X, dtype=np.float64) @ self.w + self.bias


def decision(h: Hyperplane, x) -> float:
    """``w.x`` (plus bias when fitted) for a single example."""
    if isinstance(x, SparseVector):
        return x.dot(h.w) + h.bias
    if sp.issparse(x):
        return float(h.decision(x)[0])
    return float(np.dot(h.w, np.asarray(x, dtype=np.float64)) + h.bias)


def margin(h: Hyperplane, x) -> float:
    return abs(decision(h, x))


@numba.njit(cache=True)
def _cd_epoch(indptr, indices, data, y, cost, qii, alpha, w, order, budget):
    """One pass of dual coordinate descent in the given order.

    Returns the number of coordinates visited (stops early at ``budget``).
    """
    visited = 0
    for k in range(order.shape[0]):
        if visited >= budget:
            break
        i = order[k]
        visited += 1
        start = indptr[i]
        end = indptr[i + 1]
        if qii[i] <= 0.0:
            # zero feature row: the dual term is linear, optimum at the box edge
            alpha[i] = cost[i]
            continue
        dot = 0.0
        for p in range(start, end):
            dot += w[indices[p]] * data[p]
        g = y[i] * dot - 1.0
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= cost[i]:
            pg = max(g, 0.0)
        else:
            pg = g
        if pg == 0.0:
            continue
        a_new = a - g / qii[i]
        if a_new < 0.0:
            a_new = 0.0
        elif a_new > cost[i]:
            a_new = cost[i]
        delta = (a_new - a) * y[i]
        if delta != 0.0:
            for p in range(start, end):
                w[indices[p]] += delta * data[p]
            alpha[i] = a_new
    return visited


def objectives(X: sp.csr_matrix, y, cost, alpha, w) -> tuple[float, float]:
    """Primal and dual objective values for the current iterate."""
    half_norm = 0.5 * float(w @ w)
    hinge = np.maximum(0.0, 1.0 - y * np.asarray(X @ w).ravel())
    primal = half_norm + float(cost @ hinge)
    dual = float(alpha.sum()) - half_norm
    return primal, dual


def _to_pm1(labels) -> np.ndarray:
    y = np.asarray(labels)
    vals = set(np.unique(y).tolist())
    if vals <= {0, 1}:
        y = np.where(y == 1, 1.0, -1.0)
    elif vals <= {-1, 1}:
        y = y.astype(np.float64)
    else:
        raise ValueError("labels must be in {0,1} or {-1,+1}")
    return y


def train_cs_svm(features, labels, c_pos: float, c_neg: float, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, seed: int = 0, alpha0=None,
                 fit_intercept: bool = False) -> Hyperplane:
    """Train the cost-sensitive SVM on ``features`` (rows) and labels.

    Stops once the duality gap falls to ``tol * primal`` or after
    ``max_iter`` coordinate updates (with a :class:`ConvergenceWarning`).
    ``alpha0`` warm-starts the dual variables (clipped into the box).
    """
    X = sp.csr_matrix(features, dtype=np.float64)
    X.sort_indices()
    y = _to_pm1(labels)
    if X.shape[0] != len(y):
        raise ValueError("features and labels differ in length")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DegenerateTrainingSetError()
    if not (c_pos > 0 and c_neg > 0):
        raise ValueError("misclassification costs must be positive")
    if fit_intercept:
        X = sp.hstack([X, np.ones((X.shape[0], 1))], format="csr")

    m, d = X.shape
    cost = np.where(y > 0, float(c_pos), float(c_neg))
    qii = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    if alpha0 is None:
        alpha = np.zeros(m)
    else:
        alpha = np.clip(np.asarray(alpha0, dtype=np.float64), 0.0, cost)
    w = np.asarray(X.T @ (alpha * y)).ravel()

    rng = np.random.default_rng(seed)
    used = 0
    primal, dual = objectives(X, y, cost, alpha, w)
    converged = primal - dual <= tol * abs(primal)
    while not converged and used < max_iter:
        order = rng.permutation(m)
        used += _cd_epoch(X.indptr, X.indices, X.data, y, cost, qii, alpha, w, order,
                          max_iter - used)
        # recompute w from alpha so rounding drift cannot accumulate across epochs
        w = np.asarray(X.T @ (alpha * y)).ravel()
        primal, dual = objectives(X, y, cost, alpha, w)
        converged = primal - dual <= tol * abs(primal)
    if not converged:
        warnings.warn(
            f"SVM dual coordinate descent stopped after {used} updates with "
            f"relative duality gap {(primal - dual) / abs(primal):.3g} > {tol:g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    bias = 0.0
    if fit_intercept:
        bias = float(w[-1])
        w = w[:-1].copy()
    return Hyperplane(w=w, c_pos=float(c_pos), c_neg=float(c_neg), tol=tol, max_iter=max_iter,
                      bias=bias, alpha=alpha, primal=primal, dual=dual, n_updates=used,
                      converged=converged)
