"""Budgeted active selection of negative training examples.

Starting from all positives plus a random balanced seed of negatives, the
current model repeatedly ranks the remaining non-positive pool by
confidence and the least confident batch is added as negatives, until
exactly ``budget`` negatives have been chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._seeding import derive_seed
from .learner import Learner, TrainingSet, least_confident, make_learner

DEFAULT_BATCH = 150
BUDGET_PRESETS = (450, 600, 750)


@dataclass(frozen=True)
class SelectionConfig:
    budget: int
    batch: int = DEFAULT_BATCH
    seed_size: int | None = None  # None: |S+|
    rng_seed: int = 0

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.seed_size is not None and self.seed_size < 1:
            raise ValueError("seed size must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    batch: np.ndarray
    confidences: np.ndarray
    pool_size: int
    pool_confidence_min: float
    pool_confidence_median: float
    pool_confidence_max: float


@dataclass
class SelectionTrace:
    seed: np.ndarray
    iterations: list = field(default_factory=list)
    retrain_count: int = 0

    @property
    def selected(self) -> np.ndarray:
        parts = [self.seed] + [r.batch for r in self.iterations]
        return np.sort(np.concatenate(parts)) if parts else np.empty(0, np.int64)

    @property
    def actively_selected(self) -> np.ndarray:
        if not self.iterations:
            return np.empty(0, np.int64)
        return np.sort(np.concatenate([r.batch for r in self.iterations]))


def expected_retrains(budget: int, seed_size: int, batch: int) -> int:
    return math.ceil(max(budget - seed_size, 0) / batch)


def select_negatives(g, positives, negatives, cfg: SelectionConfig, learner) -> tuple[np.ndarray, SelectionTrace]:
    """Choose ``cfg.budget`` negatives from ``negatives`` by least-confidence batches.

    ``learner`` is a :class:`~pu_negsel.learner.Learner` or a learner config.
    Only negatives count toward the budget; the seed holds
    ``min(seed_size or |S+|, budget)`` uniformly drawn negatives and every
    later batch has ``min(batch, budget - selected)`` members.
    """
    learner = learner if isinstance(learner, Learner) else make_learner(learner)
    pos = np.unique(np.asarray(positives, dtype=np.int64))
    neg = np.unique(np.asarray(negatives, dtype=np.int64))
    B = cfg.budget
    if len(pos) == 0:
        raise ValueError("no positive examples")
    if np.intersect1d(pos, neg).size:
        raise ValueError("positive and non-positive sets overlap")
    if B >= len(neg):
        raise ValueError(f"budget {B} must be smaller than the pool of {len(neg)} negatives")

    rng = np.random.default_rng(derive_seed("seed-negatives", cfg.rng_seed))
    n_seed = min(cfg.seed_size if cfg.seed_size is not None else len(pos), B)
    seed_set = np.sort(rng.choice(neg, size=n_seed, replace=False))
    trace = SelectionTrace(seed=seed_set)

    train_seed = derive_seed("learner", cfg.rng_seed)
    chosen = np.zeros(neg.max() + 1, dtype=bool)
    chosen[seed_set] = True
    n_chosen = n_seed
    model = learner.learn(g, TrainingSet(pos, seed_set), train_seed)
    t = 0
    while n_chosen < B:
        s_now = min(cfg.batch, B - n_chosen)
        pool = neg[~chosen[neg]]
        batch, batch_conf, conf = least_confident(model, g, pool, s_now)
        trace.iterations.append(IterationRecord(
            iteration=t + 1,
            batch=batch,
            confidences=batch_conf,
            pool_size=len(pool),
            pool_confidence_min=float(conf.min()),
            pool_confidence_median=float(np.median(conf)),
            pool_confidence_max=float(conf.max()),
        ))
        chosen[batch] = True
        n_chosen += s_now
        model = learner.update(model, g, TrainingSet(pos, neg[chosen[neg]]))
        trace.retrain_count += 1
        t += 1
    return neg[chosen[neg]], trace


def rho(trace: SelectionTrace, noisy) -> float:
    """Fraction of the noisy-label nodes that ended up selected; NaN when none exist."""
    noisy = np.unique(np.asarray(noisy, dtype=np.int64))
    if len(noisy) == 0:
        return float("nan")
    return float(np.isin(noisy, trace.selected).sum() / len(noisy))


TRACE_COLUMNS = ("term", "iteration", "node_id", "confidence", "is_noisy")


def trace_rows(term, trace: SelectionTrace, node_ids, noisy=()):
    """Rows for the trace TSV; seed members get iteration 0 and confidence ``NA``."""
    noisy = set(int(i) for i in noisy)
    for i in trace.seed:
        yield term, 0, node_ids[i], "NA", int(int(i) in noisy)
    for rec in trace.iterations:
        for i, c in zip(rec.batch, rec.confidences):
            yield term, rec.iteration, node_ids[i], repr(float(c)), int(int(i) in noisy)
