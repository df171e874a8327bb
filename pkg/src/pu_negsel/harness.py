"""Experiment orchestration: k-fold CV, temporal holdout, passive baselines, s sweep.

For every term the nodes are split into stratified folds. On each fold the
training part supplies S+ (old-release positives) and S- (everything else);
negatives for the final model come from one of three modes:

``al``       active least-confidence selection of ``B`` negatives
``pnosub``   all of S-
``prndsub``  ``B`` negatives drawn uniformly from S-

The final model is always trained from scratch on S+ plus the chosen
negatives and scores the held-out fold. Test-fold predictions are pooled
per term before computing per-term metrics, which are then averaged with
equal weight over terms.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from ._seeding import derive_seed
from .forest import ForestConfig
from .labels import (
    TemporalLabeling,
    filter_terms,
    load_temporal,
    stratified_folds,
    temporal_sets,
    term_seed,
)
from .learner import TrainingSet, make_learner
from .negsel import SelectionConfig, expected_retrains, select_negatives, trace_rows
from .netio import DEFAULT_THRESHOLD, STRING_SCALE, WeightedGraph, load_network, normalize
from .svm import SVMConfig

logger = logging.getLogger(__name__)

MODES = ("al", "pnosub", "prndsub")
LEARNERS = ("svm", "rf")
GROUPS = (("10-20", 10, 20), ("21-100", 21, 100))


@dataclass(frozen=True)
class ExperimentConfig:
    network: str | None = None
    annotations_old: str | None = None
    annotations_new: str | None = None
    learner: str = "svm"
    mode: str = "al"
    B: int | None = None
    B_frac: float | None = None  # budget as a fraction of each fold's S-
    s: int = 150
    k: int = 3
    seed: int = 0
    min_pos: int = 10
    max_pos: int = 100
    min_noisy: int | None = None  # None: 5 for holdout runs, 0 otherwise
    threshold: float = DEFAULT_THRESHOLD
    scale: bool = True
    grid: int = metrics.DEFAULT_GRID_SIZE
    coverage: bool = False
    c_neg: float = 1.0
    c_pos: float | None = None
    tol: float = 1e-4
    max_iter: int = 1_000_000
    fit_intercept: bool = False
    num_trees: int = 200
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ValueError(f"learner must be one of {LEARNERS}, got {self.learner!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode != "pnosub" and self.B is None and self.B_frac is None:
            raise ValueError(f"mode {self.mode!r} needs a budget (B or B_frac)")
        if self.B is not None and self.B_frac is not None:
            raise ValueError("give either B or B_frac, not both")
        if self.B_frac is not None and not 0 < self.B_frac <= 1:
            raise ValueError("B_frac must lie in (0, 1]")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.min_pos > self.max_pos:
            raise ValueError("min_pos must not exceed max_pos")

    def learner_config(self):
        if self.learner == "svm":
            return SVMConfig(c_pos=self.c_pos, c_neg=self.c_neg, tol=self.tol,
                             max_iter=self.max_iter, fit_intercept=self.fit_intercept)
        return ForestConfig(num_trees=self.num_trees)

    def budget_for(self, pool_size: int) -> int:
        if self.B is not None:
            return self.B
        return max(1, round(self.B_frac * pool_size))

    def digest(self) -> str:
        """Hash of the settings that affect results (paths, workers and out_dir excluded)."""
        d = asdict(self)
        for key in ("network", "annotations_old", "annotations_new", "workers", "out_dir"):
            d.pop(key)
        blob = json.dumps(d, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Dataset:
    graph: WeightedGraph
    terms: list

    @property
    def temporal(self) -> bool:
        return any(np.any(t.y_old != t.y_new) for t in self.terms)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    raw = load_network(cfg.network, threshold=cfg.threshold)
    g = normalize(raw, scale=STRING_SCALE if cfg.scale else None)
    new_path = cfg.annotations_new or cfg.annotations_old
    terms = load_temporal(cfg.annotations_old, new_path, g.node_ids)
    return Dataset(g, terms)


def select_terms(data: Dataset, cfg: ExperimentConfig, holdout: bool = False) -> list:
    terms = filter_terms(data.terms, cfg.min_pos, cfg.max_pos)
    min_noisy = cfg.min_noisy if cfg.min_noisy is not None else (5 if holdout else 0)
    if min_noisy > 0:
        terms = [t for t in terms if len(temporal_sets(t).noisy) >= min_noisy]
    if not terms:
        raise ValueError("no terms survive the filters")
    return terms


@dataclass
class TermResult:
    term_id: str
    n_pos: int
    scores: np.ndarray  # pooled test-fold scores, one per node
    predictions: np.ndarray
    fold_rows: list = field(default_factory=list)
    holdout: dict | None = None
    rho_hits: int = 0
    rho_total: int = 0
    traces: list = field(default_factory=list)  # (fold, trace, noisy-in-train)
    retrains: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)


def choose_negatives(g, cfg: ExperimentConfig, s_pos, s_neg, rng_seed: int, learner):
    """Negatives for the final model; returns (negatives, trace or None, budget)."""
    if cfg.mode == "pnosub":
        return s_neg, None, len(s_neg)
    budget = cfg.budget_for(len(s_neg))
    if budget >= len(s_neg):
        return s_neg, None, budget
    if cfg.mode == "prndsub":
        rng = np.random.default_rng(derive_seed("prndsub", rng_seed))
        return np.sort(rng.choice(s_neg, size=budget, replace=False)), None, budget
    sel_cfg = SelectionConfig(budget=budget, batch=cfg.s, rng_seed=rng_seed)
    chosen, trace = select_negatives(g, s_pos, s_neg, sel_cfg, learner)
    return chosen, trace, budget


def evaluate_term(g: WeightedGraph, t: TemporalLabeling, cfg: ExperimentConfig) -> TermResult:
    sets = temporal_sets(t)
    y_old = t.y_old
    plan = stratified_folds(t, cfg.k, term_seed(cfg.seed, t.term_id))
    learner = make_learner(cfg.learner_config())
    n = g.n
    res = TermResult(t.term_id, int(y_old.sum()), np.zeros(n), np.zeros(n, dtype=np.int8))
    timing = {"selection": 0.0, "training": 0.0, "scoring": 0.0}
    t_start = time.perf_counter()
    noisy_mask = np.zeros(n, dtype=bool)
    noisy_mask[sets.noisy] = True
    ho_tp = ho_fp = ho_fn = 0

    for fold in range(cfg.k):
        test = plan.test_nodes(fold)
        train = plan.train_nodes(fold)
        s_pos = train[y_old[train] == 1]
        s_neg = train[y_old[train] == 0]
        fold_seed = derive_seed("fold", cfg.seed, t.term_id, fold)

        t0 = time.perf_counter()
        chosen, trace, budget = choose_negatives(g, cfg, s_pos, s_neg, fold_seed, learner)
        t1 = time.perf_counter()
        if np.intersect1d(chosen, test).size or np.intersect1d(s_pos, test).size:
            raise RuntimeError(f"test leakage in term {t.term_id} fold {fold}")

        model = learner.learn(g, TrainingSet(s_pos, chosen), derive_seed("final", fold_seed))
        t2 = time.perf_counter()
        scores = model.scores(g, test)
        pred = (scores > model.threshold).astype(np.int8)
        t3 = time.perf_counter()
        timing["selection"] += t1 - t0
        timing["training"] += t2 - t1
        timing["scoring"] += t3 - t2

        res.scores[test] = scores
        res.predictions[test] = pred
        p, r, f = metrics.prf_from_predictions(pred, y_old[test])
        fold_noisy = s_neg[noisy_mask[s_neg]]
        fold_rho = float("nan")
        if trace is not None:
            hits = int(np.isin(fold_noisy, chosen).sum())
            res.rho_hits += hits
            res.rho_total += len(fold_noisy)
            fold_rho = hits / len(fold_noisy) if len(fold_noisy) else float("nan")
            res.traces.append((fold, trace, fold_noisy))
            seed_size = len(trace.seed)
            res.retrains.append({"fold": fold, "B": budget, "seed_size": seed_size, "s": cfg.s,
                                 "retrains": trace.retrain_count,
                                 "expected": expected_retrains(budget, seed_size, cfg.s)})
        res.fold_rows.append({
            "fold": fold, "n_test": len(test), "n_pos_test": int(y_old[test].sum()),
            "n_neg_train": len(chosen), "P": p, "R": r, "F": f,
            "AUPR": metrics.aupr(scores, y_old[test]), "rho": fold_rho,
        })

        # old-release negatives in the test fold, judged against the new release
        cand = test[y_old[test] == 0]
        cand_pred = res.predictions[cand].astype(bool)
        cand_true = t.y_new[cand].astype(bool)
        ho_tp += int(np.sum(cand_pred & cand_true))
        ho_fp += int(np.sum(cand_pred & ~cand_true))
        ho_fn += int(np.sum(~cand_pred & cand_true))

    if len(sets.noisy):
        p, r, f = metrics.prf(ho_tp, ho_fp, ho_fn)
        cand = np.flatnonzero(y_old == 0)
        res.holdout = {"n_noisy": len(sets.noisy), "P": p, "R": r, "F": f,
                       "AUPR": metrics.aupr(res.scores[cand], t.y_new[cand])}
    timing["total"] = time.perf_counter() - t_start
    res.timing = timing
    return res


@dataclass
class EvaluationReport:
    cfg: ExperimentConfig
    kind: str
    term_results: list
    fold_rows: list
    term_rows: list
    holdout_rows: list
    corpus: dict
    groups: list
    wall_time: float

    @property
    def mean_f(self) -> float:
        return self.corpus["F"]

    @property
    def mean_rho(self) -> float:
        return self.corpus["rho"]

    def rho_by_term(self) -> dict:
        return {r["term"]: r["rho"] for r in self.term_rows}

    @property
    def retrain_records(self) -> list:
        return [dict(term=tr.term_id, **rec) for tr in self.term_results for rec in tr.retrains]


def _nanmean(values) -> float:
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(vals)) if vals else float("nan")


_WORKER_GRAPH = None


def _init_worker(g, filters):
    global _WORKER_GRAPH
    _WORKER_GRAPH = g
    warnings.filters[:] = filters  # e.g. warnings escalated to errors by the caller


def _worker_task(args):
    t, cfg = args
    return evaluate_term(_WORKER_GRAPH, t, cfg)


def _run_terms(g, terms, cfg) -> list:
    if cfg.workers > 1 and len(terms) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker,
                                 initargs=(g, list(warnings.filters))) as pool:
            results = list(pool.map(_worker_task, [(t, cfg) for t in terms]))
    else:
        results = [evaluate_term(g, t, cfg) for t in terms]
    return sorted(results, key=lambda r: r.term_id)


def _assemble(cfg, kind, data: Dataset, terms, results, wall) -> EvaluationReport:
    fold_rows, term_rows, holdout_rows = [], [], []
    by_id = {t.term_id: t for t in terms}
    for res in results:
        y = by_id[res.term_id].y_old
        for row in res.fold_rows:
            fold_rows.append({"term": res.term_id, **row})
        p, r, f = metrics.prf_from_predictions(res.predictions, y)
        rho = res.rho_hits / res.rho_total if res.rho_total else float("nan")
        term_rows.append({"term": res.term_id, "n_pos": res.n_pos, "P": p, "R": r, "F": f,
                          "AUPR": metrics.aupr(res.scores, y), "rho": rho,
                          "n_noisy_train": res.rho_total})
        if res.holdout is not None:
            holdout_rows.append({"term": res.term_id, **res.holdout})

    # instance-centric Fmax over nodes carrying at least one evaluated annotation
    y_mat = np.vstack([by_id[r.term_id].y_old for r in results])
    s_mat = metrics.rescale_scores(np.vstack([r.scores for r in results]))
    annotated = y_mat.any(axis=0)
    fm = metrics.fmax(s_mat[:, annotated], y_mat[:, annotated],
                      metrics.default_grid(cfg.grid), coverage=cfg.coverage)

    corpus = {
        "n_terms": len(term_rows),
        "P": _nanmean(r["P"] for r in term_rows),
        "R": _nanmean(r["R"] for r in term_rows),
        "F": _nanmean(r["F"] for r in term_rows),
        "AUPR": _nanmean(r["AUPR"] for r in term_rows),
        "rho": _nanmean(r["rho"] for r in term_rows),
        "Fmax": fm.fmax,
        "t_max": fm.threshold,
    }
    groups = []
    assigned = 0
    for name, lo, hi in GROUPS:
        rows = [r for r in term_rows if lo <= r["n_pos"] <= hi]
        assigned += len(rows)
        groups.append({"group": name, "n_terms": len(rows),
                       "P": _nanmean(r["P"] for r in rows), "R": _nanmean(r["R"] for r in rows),
                       "F": _nanmean(r["F"] for r in rows),
                       "AUPR": _nanmean(r["AUPR"] for r in rows)})
    groups.append({"group": "excluded", "n_terms": len(term_rows) - assigned, "P": float("nan"),
                   "R": float("nan"), "F": float("nan"), "AUPR": float("nan")})
    return EvaluationReport(cfg, kind, results, fold_rows, term_rows, holdout_rows, corpus,
                            groups, wall)


def run_cv(cfg: ExperimentConfig, data: Dataset | None = None) -> EvaluationReport:
    """k-fold CV against the old release for every term passing the filters."""
    t0 = time.perf_counter()
    data = data if data is not None else load_dataset(cfg)
    terms = select_terms(data, cfg)
    results = _run_terms(data.graph, terms, cfg)
    return _assemble(cfg, "cv", data, terms, results, time.perf_counter() - t0)


def run_holdout(cfg: ExperimentConfig, data: Dataset | None = None) -> EvaluationReport:
    """CV on the old release plus evaluation of old-release negatives against the new one.

    Terms with fewer than ``min_noisy`` (default 5) noisy nodes are dropped.
    A term whose labels did not change has no holdout row.
    """
    t0 = time.perf_counter()
    data = data if data is not None else load_dataset(cfg)
    terms = select_terms(data, cfg, holdout=True)
    results = _run_terms(data.graph, terms, cfg)
    return _assemble(cfg, "holdout", data, terms, results, time.perf_counter() - t0)


def run_prndsub(cfg: ExperimentConfig, data: Dataset | None = None) -> EvaluationReport:
    return run_cv(replace(cfg, mode="prndsub"), data)


def run_pnosub(cfg: ExperimentConfig, data: Dataset | None = None) -> EvaluationReport:
    return run_cv(replace(cfg, mode="pnosub", B=None, B_frac=None), data)


@dataclass
class SweepPoint:
    s: int
    mean_f: float
    wall_time: float
    retrains: int
    expected_retrains: int
    report: EvaluationReport = field(repr=False)


def sweep_s(cfg: ExperimentConfig, s_values, data: Dataset | None = None) -> list:
    """One active-learning CV run per batch size ``s``."""
    data = data if data is not None else load_dataset(cfg)
    out = []
    for s in s_values:
        if cfg.B is not None and s > cfg.B:
            raise ValueError(f"s={s} exceeds the budget B={cfg.B}")
        rep = run_cv(replace(cfg, mode="al", s=s), data)
        recs = rep.retrain_records
        out.append(SweepPoint(s, rep.mean_f, rep.wall_time, sum(r["retrains"] for r in recs),
                              sum(r["expected"] for r in recs), rep))
    return out


# ---------------------------------------------------------------------------
# TSV output


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, (float, np.floating)):
        return "NA" if math.isnan(v) else f"{float(v):.10g}"
    return str(v)


def header_line(cfg: ExperimentConfig) -> str:
    return f"# pu_negsel config_hash={cfg.digest()} seed={cfg.seed}\n"


def _write_tsv(path: Path, header: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(row.get(c)) for c in columns) + "\n")


REPORT_COLUMNS = ("block", "term", "fold", "n_pos", "P", "R", "F", "AUPR", "rho", "Fmax", "t_max")


def write_report(report: EvaluationReport, out_dir, node_ids, timing: bool = False) -> dict:
    """Write report.tsv, trace.tsv and groups.tsv; returns their paths.

    Wall-clock times differ between runs, so timing.tsv is only written on
    request and is the one output that is not reproducible.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = header_line(report.cfg)
    n_pos = {r["term"]: r["n_pos"] for r in report.term_rows}

    rows = []
    for r in report.fold_rows:
        rows.append({"block": "fold", **r, "n_pos": r["n_pos_test"]})
    for r in report.term_rows:
        rows.append({"block": "term", "fold": "all", **r})
    for r in report.holdout_rows:
        rows.append({"block": "holdout", "fold": "all", "n_pos": n_pos[r["term"]], **r,
                     "rho": None})
    c = report.corpus
    rows.append({"block": "corpus", "term": "ALL", "fold": "all", "n_pos": None, **c})
    paths = {"report": out / "report.tsv", "trace": out / "trace.tsv",
             "groups": out / "groups.tsv"}
    _write_tsv(paths["report"], header, REPORT_COLUMNS, rows)

    trace_out = []
    for res in report.term_results:
        for fold, trace, noisy in res.traces:
            for term, it, node, conf, is_noisy in trace_rows(res.term_id, trace, node_ids, noisy):
                trace_out.append({"term": term, "fold": fold, "iteration": it, "node_id": node,
                                  "confidence": conf, "is_noisy": is_noisy})
    _write_tsv(paths["trace"], header,
               ("term", "fold", "iteration", "node_id", "confidence", "is_noisy"), trace_out)
    _write_tsv(paths["groups"], header, ("group", "n_terms", "P", "R", "F", "AUPR"),
               report.groups)
    if timing:
        paths["timing"] = out / "timing.tsv"
        rows = [{"term": r.term_id, **r.timing} for r in report.term_results]
        rows.append({"term": "ALL", "total": report.wall_time})
        _write_tsv(paths["timing"], header, ("term", "selection", "training", "scoring", "total"),
                   rows)
    return paths
