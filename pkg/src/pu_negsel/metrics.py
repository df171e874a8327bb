"""Per-term classification metrics, AUPR and instance-centric Fmax."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_GRID_SIZE = 101


class PRF(NamedTuple):
    precision: float
    recall: float
    f: float


def _ratio(num, den) -> float:
    return float(num) / den if den else 0.0


def prf(tp: int, fp: int, fn: int) -> PRF:
    """Precision, recall and F1 from counts; every 0/0 is taken as 0."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    f = _ratio(2 * p * r, p + r)
    return PRF(p, r, f)


def prf_from_predictions(pred, labels) -> PRF:
    pred = np.asarray(pred).astype(bool)
    labels = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    return prf(tp, fp, fn)


def aupr(scores, labels) -> float:
    """Area under the step precision-recall curve (average precision).

    Nodes with equal scores form one block: the block is accepted or
    rejected as a whole, so the result does not depend on the order of
    tied items. Returns NaN when there are no positives.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in shape")
    n_pos = int(labels.sum())
    if n_pos == 0:
        return float("nan")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    hits = np.cumsum(labels[order])
    # last position of each block of equal scores
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tp = hits[ends]
    predicted = ends + 1
    new_tp = np.diff(np.concatenate([[0], tp]))
    return float(np.sum(new_tp * (tp / predicted)) / n_pos)


def rescale_scores(scores) -> np.ndarray:
    """Min-max rescale each row (term) of ``scores`` into [0, 1]; constant rows map to 0."""
    s = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    lo = s.min(axis=1, keepdims=True)
    span = s.max(axis=1, keepdims=True) - lo
    out = np.zeros_like(s)
    np.divide(s - lo, span, out=out, where=span > 0)
    return out


def default_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


class FmaxResult(NamedTuple):
    fmax: float
    threshold: float
    precision: float
    recall: float


def precision_recall_at(scores, labels, t: float, coverage: bool = False) -> tuple[float, float]:
    """Instance-averaged multi-label precision and recall at threshold ``t``.

    ``scores`` and ``labels`` are (terms x instances). A term is predicted
    for an instance when its score is ``>= t``. By default both averages
    run over all instances with 0/0 counted as 0; ``coverage=True``
    averages precision only over instances with at least one prediction.
    """
    pred = np.asarray(scores) >= t
    truth = np.asarray(labels).astype(bool)
    tp = np.sum(pred & truth, axis=0)
    fp = np.sum(pred & ~truth, axis=0)
    fn = np.sum(~pred & truth, axis=0)
    n = truth.shape[1]
    if n == 0:
        return 0.0, 0.0
    npred = tp + fp
    prec_j = np.divide(tp, npred, out=np.zeros(n), where=npred > 0)
    ntrue = tp + fn
    rec_j = np.divide(tp, ntrue, out=np.zeros(n), where=ntrue > 0)
    if coverage:
        covered = npred > 0
        prec = float(prec_j[covered].mean()) if covered.any() else 0.0
    else:
        prec = float(prec_j.mean())
    return prec, float(rec_j.mean())


def fmax(scores, labels, thresholds=None, coverage: bool = False) -> FmaxResult:
    """Maximum over ``thresholds`` of the harmonic mean of Prec(t) and Rec(t).

    The first threshold attaining the maximum is reported.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels))
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in shape")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    grid = default_grid() if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("threshold grid is empty")
    best = FmaxResult(-1.0, float("nan"), 0.0, 0.0)
    for t in grid:
        p, r = precision_recall_at(scores, labels, t, coverage=coverage)
        f = _ratio(2 * p * r, p + r)
        if f > best.fmax:
            best = FmaxResult(f, float(t), p, r)
    return best
