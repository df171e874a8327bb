"""Class-balanced random forest.

Every tree is grown on its own bootstrap in which the positive and the
negative class are each drawn with total probability 1/2 (uniform within a
class), so trees see balanced data even when positives are scarce. The
ensemble outputs the fraction of trees voting positive; uncertainty is the
binary entropy of that fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.tree import DecisionTreeClassifier

from ._seeding import derive_seed
from .exceptions import DegenerateTrainingSetError

LN2 = math.log(2.0)
_PREDICT_CHUNK = 1024


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 200
    sample_size: int | None = None  # None: |L|
    feature_subset_size: int | None = None  # None: ceil(sqrt(n_features))
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")


@dataclass(frozen=True)
class TreeArrays:
    """Flattened binary tree; ``left == -1`` marks a leaf carrying ``vote``."""

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    vote: np.ndarray
    seed: int

    @classmethod
    def from_sklearn(cls, est: DecisionTreeClassifier, seed: int) -> "TreeArrays":
        t = est.tree_
        classes = np.asarray(est.classes_)
        vote = classes[np.argmax(t.value[:, 0, :], axis=1)].astype(np.int8)
        return cls(t.children_left.astype(np.int64), t.children_right.astype(np.int64),
                   t.feature.astype(np.int64), t.threshold.astype(np.float64), vote, seed)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.left[node] != -1
        while active.any():
            r = rows[active]
            nd = node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.left[node] != -1
        return self.vote[node]


@dataclass(frozen=True)
class Forest:
    trees: list
    num_trees: int
    sample_size: int
    feature_subset_size: int
    rng_seed: int
    n_features: int = field(default=0)

    def votes(self, X) -> np.ndarray:
        """Number of trees voting positive for each row of ``X``."""
        m = X.shape[0]
        out = np.zeros(m, dtype=np.int64)
        for lo in range(0, m, _PREDICT_CHUNK):
            chunk = X[lo:lo + _PREDICT_CHUNK]
            # trees were fitted on float32 copies of the features
            dense = chunk.toarray() if sp.issparse(chunk) else np.asarray(chunk)
            dense = dense.astype(np.float32)
            acc = np.zeros(dense.shape[0], dtype=np.int64)
            for tree in self.trees:
                acc += tree.predict(dense)
            out[lo:lo + dense.shape[0]] = acc
        return out

    def predict_proba(self, X) -> np.ndarray:
        """Fraction ``p1`` of trees voting positive."""
        return self.votes(X) / self.num_trees


def sample_bootstrap(ts, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` members of training set ``ts`` with replacement.

    A positive is drawn with probability ``1 / (2 |L+|)`` and a negative with
    ``1 / (2 |L-|)`` per draw, so each class carries total mass 1/2.
    """
    return _balanced_draw(ts.positives, ts.negatives, size, rng)


def _balanced_draw(positives, negatives, size, rng):
    pos = np.asarray(positives, dtype=np.int64)
    neg = np.asarray(negatives, dtype=np.int64)
    if len(pos) == 0 or len(neg) == 0:
        raise DegenerateTrainingSetError()
    if size < 0:
        raise ValueError("bootstrap size must be non-negative")
    pool = np.concatenate([pos, neg])
    p = np.concatenate([np.full(len(pos), 0.5 / len(pos)), np.full(len(neg), 0.5 / len(neg))])
    return rng.choice(pool, size=size, replace=True, p=p / p.sum())


def entropy(p1):
    """Natural-log binary entropy with ``0 log 0 = 0``; accepts scalars or arrays."""
    p = np.asarray(p1, dtype=np.float64)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("probability outside [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return float(h) if h.ndim == 0 else h


def train_forest(X, labels, cfg: ForestConfig, seed: int) -> Forest:
    """Grow ``cfg.num_trees`` Gini trees on balanced bootstraps of the rows of ``X``.

    Tree ``t`` derives one seed from ``(seed, t)`` and uses it for both its
    bootstrap and its split feature subsets, so trees are independent of
    build order.
    """
    X = sp.csr_matrix(X, dtype=np.float64)
    y = np.asarray(labels).astype(np.int8)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise DegenerateTrainingSetError()
    m, d = X.shape
    n_sample = cfg.sample_size if cfg.sample_size is not None else m
    n_sub = cfg.feature_subset_size if cfg.feature_subset_size is not None else math.ceil(math.sqrt(d))
    n_sub = max(1, min(n_sub, d))
    pos_rows = np.flatnonzero(y == 1)
    neg_rows = np.flatnonzero(y == 0)

    trees = []
    for t in range(cfg.num_trees):
        tree_seed = derive_seed("tree", seed, t)
        rng = np.random.default_rng(tree_seed)
        rows = _balanced_draw(pos_rows, neg_rows, n_sample, rng)
        est = DecisionTreeClassifier(
            criterion="gini",
            max_features=n_sub,
            min_samples_leaf=cfg.min_samples_leaf,
            random_state=tree_seed % (2**32),
        )
        est.fit(X[rows], y[rows])
        trees.append(TreeArrays.from_sklearn(est, tree_seed))
    return Forest(trees=trees, num_trees=cfg.num_trees, sample_size=n_sample,
                  feature_subset_size=n_sub, rng_seed=seed, n_features=d)
