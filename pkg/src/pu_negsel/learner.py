"""Learner contract shared by the SVM and the forest.

A :class:`Model` scores graph nodes (higher means more positive) and
reports a non-negative confidence where lower means less certain:
``|w.x|`` for the SVM, ``log 2 - H(p1)`` for the forest. One ``lcp``
routine then serves both learners.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import forest as _forest
from . import svm as _svm
from .exceptions import DegenerateTrainingSetError

FORMAT_VERSION = 1


def _index_array(idx) -> np.ndarray:
    a = np.unique(np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrainingSet:
    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positives", _index_array(self.positives))
        object.__setattr__(self, "negatives", _index_array(self.negatives))
        if np.intersect1d(self.positives, self.negatives).size:
            raise ValueError("positive and negative training sets overlap")

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.positives, self.negatives])

    @property
    def labels(self) -> np.ndarray:
        return np.concatenate([np.ones(len(self.positives), np.int8),
                               np.zeros(len(self.negatives), np.int8)])

    def __len__(self):
        return len(self.positives) + len(self.negatives)

    def check_trainable(self):
        if len(self.positives) == 0 or len(self.negatives) == 0:
            raise DegenerateTrainingSetError()

    def issuperset(self, other: "TrainingSet") -> bool:
        return (np.isin(other.positives, self.positives).all()
                and np.isin(other.negatives, self.negatives).all())


class Model:
    """Trained learner; immutable once built."""

    kind: str = ""
    threshold: float = 0.0

    def __init__(self, config, training_set: TrainingSet, training_seed: int):
        self.config = config
        self.training_set = training_set
        self.training_seed = training_seed

    def scores(self, g, idx=None) -> np.ndarray:
        raise NotImplementedError

    def confidence(self, g, idx=None) -> np.ndarray:
        raise NotImplementedError

    def score(self, g, i: int) -> float:
        if not 0 <= i < g.n:
            raise IndexError(f"node index {i} out of range for graph with {g.n} nodes")
        return float(self.scores(g, [i])[0])

    def predict(self, g, idx=None) -> np.ndarray:
        """Hard 0/1 classification at the learner's natural threshold."""
        return (self.scores(g, idx) > self.threshold).astype(np.int8)

    def _payload(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "learner_kind": self.kind,
            "config": asdict(self.config),
            "training_seed": self.training_seed,
            "positives": self.training_set.positives.tolist(),
            "negatives": self.training_set.negatives.tolist(),
            "parameters": self._payload(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")


def _rows(g, idx):
    if idx is None:
        return g.W
    return g.rows(idx)


class SVMModel(Model):
    kind = "svm"
    threshold = 0.0

    def __init__(self, config, training_set, training_seed, hyperplane: _svm.Hyperplane):
        super().__init__(config, training_set, training_seed)
        self.hyperplane = hyperplane

    def scores(self, g, idx=None):
        return self.hyperplane.decision(_rows(g, idx))

    def confidence(self, g, idx=None):
        return np.abs(self.scores(g, idx))

    def _payload(self):
        h = self.hyperplane
        return {"w": h.w.tolist(), "bias": h.bias, "alpha": h.alpha.tolist(),
                "c_pos": h.c_pos, "c_neg": h.c_neg, "primal": h.primal, "dual": h.dual,
                "n_updates": h.n_updates, "converged": h.converged}


class ForestModel(Model):
    kind = "forest"
    threshold = 0.5

    def __init__(self, config, training_set, training_seed, ensemble: _forest.Forest):
        super().__init__(config, training_set, training_seed)
        self.forest = ensemble

    def scores(self, g, idx=None):
        return self.forest.predict_proba(_rows(g, idx))

    def confidence(self, g, idx=None):
        return _forest.LN2 - _forest.entropy(self.scores(g, idx))

    def _payload(self):
        f = self.forest
        return {
            "num_trees": f.num_trees,
            "sample_size": f.sample_size,
            "feature_subset_size": f.feature_subset_size,
            "rng_seed": f.rng_seed,
            "n_features": f.n_features,
            "trees": [
                {"left": t.left.tolist(), "right": t.right.tolist(), "feature": t.feature.tolist(),
                 "threshold": t.threshold.tolist(), "vote": t.vote.tolist(), "seed": t.seed}
                for t in f.trees
            ],
        }


class Learner:
    """Learning algorithm plus its configuration: the contract negative selection uses."""

    def __init__(self, config):
        self.config = config

    def learn(self, g, ts: TrainingSet, seed: int) -> Model:
        raise NotImplementedError

    def update(self, model: Model, g, ts: TrainingSet) -> Model:
        if not ts.issuperset(model.training_set):
            raise ValueError("update requires a superset of the previous training set")
        return self.learn(g, ts, model.training_seed)


class SVMLearner(Learner):
    def __init__(self, config: _svm.SVMConfig | None = None):
        super().__init__(config or _svm.SVMConfig())

    def learn(self, g, ts, seed, alpha0=None):
        ts.check_trainable()
        cfg = self.config
        c_pos, c_neg = cfg.costs(len(ts.positives), len(ts.negatives))
        h = _svm.train_cs_svm(g.rows(ts.nodes), ts.labels, c_pos, c_neg, tol=cfg.tol,
                              max_iter=cfg.max_iter, seed=seed, alpha0=alpha0,
                              fit_intercept=cfg.fit_intercept)
        return SVMModel(cfg, ts, seed, h)

    def update(self, model, g, ts):
        """Retrain on ``ts``, warm-started from the previous dual solution."""
        if not ts.issuperset(model.training_set):
            raise ValueError("update requires a superset of the previous training set")
        prev_nodes = model.training_set.nodes
        alpha0 = np.zeros(len(ts))
        pos = {int(v): k for k, v in enumerate(ts.nodes)}
        for node, a in zip(prev_nodes, model.hyperplane.alpha):
            alpha0[pos[int(node)]] = a
        return self.learn(g, ts, model.training_seed, alpha0=alpha0)


class ForestLearner(Learner):
    """Forest ``update`` is a full retrain with the original seed."""

    def __init__(self, config: _forest.ForestConfig | None = None):
        super().__init__(config or _forest.ForestConfig())

    def learn(self, g, ts, seed):
        ts.check_trainable()
        ens = _forest.train_forest(g.rows(ts.nodes), ts.labels, self.config, seed)
        return ForestModel(self.config, ts, seed, ens)


def make_learner(config) -> Learner:
    if isinstance(config, _svm.SVMConfig):
        return SVMLearner(config)
    if isinstance(config, _forest.ForestConfig):
        return ForestLearner(config)
    if isinstance(config, Learner):
        return config
    raise TypeError(f"unsupported learner config {type(config).__name__}")


def learn(g, ts: TrainingSet, cfg, seed: int) -> Model:
    return make_learner(cfg).learn(g, ts, seed)


def update(m: Model, g, ts: TrainingSet) -> Model:
    return make_learner(m.config).update(m, g, ts)


def lcp(m: Model, g, pool, s: int) -> np.ndarray:
    """The ``s`` pool members with the lowest confidence, ties by node index.

    Returned in selection order (ascending confidence, then index).
    """
    return least_confident(m, g, pool, s)[0]


def least_confident(m: Model, g, pool, s: int):
    """``lcp`` plus bookkeeping: (selected, their confidences, all pool confidences)."""
    pool = np.asarray(pool, dtype=np.int64)
    if s > len(pool):
        raise ValueError(f"cannot select {s} items from a pool of {len(pool)}")
    if s < 0:
        raise ValueError("selection size must be non-negative")
    conf = np.asarray(m.confidence(g, pool), dtype=np.float64)
    order = np.lexsort((pool, conf))[:s]
    return pool[order], conf[order], conf


def load_model(path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def model_from_dict(d: dict) -> Model:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    ts = TrainingSet(d["positives"], d["negatives"])
    p = d["parameters"]
    if d["learner_kind"] == "svm":
        cfg = _svm.SVMConfig(**d["config"])
        h = _svm.Hyperplane(w=np.array(p["w"], dtype=np.float64), c_pos=p["c_pos"],
                            c_neg=p["c_neg"], tol=cfg.tol, max_iter=cfg.max_iter,
                            bias=p["bias"], alpha=np.array(p["alpha"], dtype=np.float64),
                            primal=p["primal"], dual=p["dual"], n_updates=p["n_updates"],
                            converged=p["converged"])
        return SVMModel(cfg, ts, d["training_seed"], h)
    if d["learner_kind"] == "forest":
        cfg = _forest.ForestConfig(**d["config"])
        trees = [
            _forest.TreeArrays(np.array(t["left"], np.int64), np.array(t["right"], np.int64),
                               np.array(t["feature"], np.int64),
                               np.array(t["threshold"], np.float64),
                               np.array(t["vote"], np.int8), t["seed"])
            for t in p["trees"]
        ]
        ens = _forest.Forest(trees=trees, num_trees=p["num_trees"], sample_size=p["sample_size"],
                             feature_subset_size=p["feature_subset_size"],
                             rng_seed=p["rng_seed"], n_features=p["n_features"])
        return ForestModel(cfg, ts, d["training_seed"], ens)
    raise ValueError(f"unknown learner kind {d['learner_kind']!r}")
