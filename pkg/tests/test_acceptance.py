"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest
from scipy.stats import binomtest

from oracles import (
    block_patterns,
    brute_fmax,
    make_stub_learner,
    reference_selection,
    step_curve_aupr,
    svm_dual_pg,
    svm_primal,
)
from pu_negsel.cli import main as cli_main
from pu_negsel.forest import LN2, entropy, sample_bootstrap
from pu_negsel.harness import ExperimentConfig, run_cv, sweep_s
from pu_negsel.learner import TrainingSet, lcp
from pu_negsel.metrics import aupr, default_grid, fmax
from pu_negsel.negsel import SelectionConfig, select_negatives
from pu_negsel.svm import train_cs_svm
from pu_negsel.synth import SynthParams, generate, to_dataset

SYNTH_SEEDS = range(20)
B_FRAC = 0.15


@pytest.fixture
def report(capsys):
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return _report


def _synth_cfg(seed, **kw):
    return ExperimentConfig(min_pos=15, max_pos=15, seed=seed, workers=1, **kw)


def test_c1_svm_matches_qp_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    problems, labels01 = [], []
    for _ in range(50):
        m, d = rng.integers(4, 41), rng.integers(1, 11)
        X = rng.normal(size=(m, d))
        y01 = rng.integers(0, 2, m)
        y01[:2] = [1, 0]
        y = np.where(y01 == 1, 1.0, -1.0)
        n_pos, n_neg = int(y01.sum()), int(m - y01.sum())
        cost = np.where(y > 0, n_neg / n_pos, 1.0)
        problems.append((X, y, cost))
        labels01.append(y01)
    oracle = svm_dual_pg(problems, iters=100_000)
    worst_obj = worst_gap = 0.0
    for (X, y, cost), y01, (_, p_ref, _) in zip(problems, labels01, oracle):
        h = train_cs_svm(X, y01, float(cost[y > 0][0]), 1.0)
        worst_obj = max(worst_obj, abs(svm_primal(X, y, cost, h.w) - p_ref) / abs(p_ref))
        worst_gap = max(worst_gap, h.gap / abs(h.primal))
    elapsed = time.perf_counter() - t0
    ok = worst_obj <= 1e-4 and worst_gap <= 1e-4 and elapsed < 30
    report(1, ok, f"max rel objective diff {worst_obj:.2e}, max rel gap {worst_gap:.2e}, "
                  f"{elapsed:.1f}s")


def test_c2_balanced_bootstrap(report):
    t0 = time.perf_counter()
    ts = TrainingSet(np.arange(5), np.arange(5, 505))
    draws = sample_bootstrap(ts, 100_000, np.random.default_rng(7))
    frac = float(np.mean(draws < 5))
    elapsed = time.perf_counter() - t0
    report(2, 0.49 <= frac <= 0.51 and elapsed < 5,
           f"positive fraction {frac:.4f} over 1e5 draws, {elapsed:.2f}s")


class _TableModel:
    def __init__(self, conf):
        self.conf = conf

    def confidence(self, g, idx=None):
        return self.conf[np.asarray(idx)]


def test_c3_entropy_and_lcp(report):
    t0 = time.perf_counter()
    ent_ok = (abs(entropy(0.5) - math.log(2)) <= 1e-12 and entropy(0.0) == 0.0
              and entropy(1.0) == 0.0 and LN2 == math.log(2))
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        pool = rng.choice(200, size=n, replace=False)
        conf = np.round(rng.random(200), int(rng.integers(0, 3)))  # coarse rounding forces ties
        s = int(rng.integers(0, n + 1))
        expected = sorted(pool.tolist(), key=lambda i: (conf[i], i))[:s]
        mismatches += lcp(_TableModel(conf), None, pool, s).tolist() != expected
    elapsed = time.perf_counter() - t0
    report(3, ent_ok and mismatches == 0 and elapsed < 5,
           f"entropy checks {'ok' if ent_ok else 'wrong'}, lcp mismatches {mismatches}/1000, "
           f"{elapsed:.2f}s")


def test_c4_selection_invariants(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    failures = []
    for trial in range(200):
        n_pos = int(rng.integers(1, 20))
        n_neg = int(rng.integers(n_pos + 2, 400))
        nodes = rng.permutation(n_pos + n_neg + 50)
        pos, neg = nodes[:n_pos], nodes[n_pos:n_pos + n_neg]
        budget = int(rng.integers(1, n_neg))
        batch = int(rng.integers(1, 60))
        chosen, trace = select_negatives(None, pos, neg, SelectionConfig(budget, batch, rng_seed=trial),
                                         make_stub_learner())
        batches = [trace.seed.tolist()] + [r.batch.tolist() for r in trace.iterations]
        flat = [i for b in batches for i in b]
        checks = {
            "size": len(chosen) == budget,
            "disjoint": len(flat) == len(set(flat)),
            "purity": set(flat) <= set(neg.tolist()) and not set(flat) & set(pos.tolist()),
            "seed": len(trace.seed) == min(n_pos, budget),
            "reference": batches[1:] == reference_selection(trace.seed, neg, budget, batch),
        }
        failures += [f"trial {trial}: {k}" for k, v in checks.items() if not v]
    elapsed = time.perf_counter() - t0
    report(4, not failures and elapsed < 10,
           f"{200 - len({f.split(':')[0] for f in failures})}/200 configurations clean"
           f"{'; ' + failures[0] if failures else ''}, {elapsed:.2f}s")


def test_c5_metric_oracles(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_aupr, cases = 0.0, 0
    for n in range(1, 9):
        for sizes, pos in block_patterns(n):
            if sum(pos) == 0:
                continue
            scores = np.repeat(np.sort(rng.random(len(sizes)))[::-1], sizes)
            labels = np.concatenate([np.r_[np.ones(p), np.zeros(s - p)]
                                     for s, p in zip(sizes, pos)]).astype(int)
            perm = rng.permutation(n)
            s, y = scores[perm], labels[perm]
            worst_aupr = max(worst_aupr, abs(aupr(s, y) - step_curve_aupr(s.tolist(), y.tolist())))
            cases += 1
    grid = default_grid()
    worst_fmax = 0.0
    for _ in range(100):
        t, m = rng.integers(1, 6), rng.integers(1, 9)
        scores = rng.random((t, m))
        labels = rng.integers(0, 2, (t, m))
        ref = brute_fmax(scores.tolist(), labels.tolist(), grid)[0]
        worst_fmax = max(worst_fmax, abs(fmax(scores, labels, grid).fmax - ref))
    elapsed = time.perf_counter() - t0
    ok = worst_aupr <= 1e-12 and worst_fmax <= 1e-12 and elapsed < 60
    report(5, ok, f"AUPR max diff {worst_aupr:.1e} over {cases} tie/label patterns, "
                  f"Fmax max diff {worst_fmax:.1e} over 100 matrices, {elapsed:.1f}s")


@pytest.fixture(scope="module")
def synth_runs():
    """AL and PrndSub cross-validation on the planted-noise instance, one per seed."""
    t0 = time.perf_counter()
    rows = []
    for seed in SYNTH_SEEDS:
        data = to_dataset(generate(SynthParams(n=600, n_pos=15, n_terms=20, seed=seed)))
        al = run_cv(_synth_cfg(seed, mode="al", B_frac=B_FRAC), data)
        rnd = run_cv(_synth_cfg(seed, mode="prndsub", B_frac=B_FRAC), data)
        rows.append((al.mean_f, rnd.mean_f, al.mean_rho))
    return np.array(rows), time.perf_counter() - t0


def _sign_test(wins, losses):
    n = wins + losses
    return binomtest(wins, n, 0.5, alternative="greater").pvalue if n else 1.0


def test_c6_al_beats_random_subsampling(report, synth_runs):
    rows, elapsed = synth_runs
    al, rnd = rows[:, 0], rows[:, 1]
    wins, losses = int(np.sum(al > rnd)), int(np.sum(al < rnd))
    p = _sign_test(wins, losses)
    ok = al.mean() >= rnd.mean() and p < 0.05 and elapsed < 300
    report(6, ok, f"mean F AL {al.mean():.4f} vs PrndSub {rnd.mean():.4f}, "
                  f"AL wins {wins}/{wins + losses} seeds, sign test p={p:.3g}, {elapsed:.0f}s")


def test_c7_noisy_label_affinity(report, synth_runs):
    rows, elapsed = synth_runs
    rho = rows[:, 2]
    target = 2 * B_FRAC
    above, below = int(np.sum(rho > target)), int(np.sum(rho < target))
    p = _sign_test(above, below)
    ok = rho.mean() > target and p < 0.05 and elapsed < 300
    report(7, ok, f"mean rho {rho.mean():.4f} vs 2 x base rate {target:.2f}, "
                  f"{above}/{above + below} seeds above, sign test p={p:.3g}")


@pytest.fixture(scope="module")
def sweep_runs():
    t0 = time.perf_counter()
    points = {}
    for seed in range(10):
        data = to_dataset(generate(SynthParams(n=600, n_pos=15, n_terms=20, seed=100 + seed)))
        points[seed] = sweep_s(_synth_cfg(seed, mode="al", B=150), [10, 25, 50], data)
    return points, time.perf_counter() - t0


def test_c8_batch_size_flatness(report, sweep_runs):
    points, elapsed = sweep_runs
    f = np.array([[p.mean_f for p in pts] for pts in points.values()])  # seeds x s
    spread = float(f.mean(axis=0).max() - f.mean(axis=0).min())
    seed_sd = float(f.std(axis=0, ddof=1).mean())
    ok = spread < seed_sd and elapsed < 300
    report(8, ok, f"spread of mean F over s=10,25,50 is {spread:.4f}; across-seed sd {seed_sd:.4f}; "
                  f"{elapsed:.0f}s")


def test_c9_retrain_count_law(report, sweep_runs):
    points, _ = sweep_runs
    records = [r for pts in points.values() for p in pts for r in p.report.retrain_records]
    bad = [r for r in records
           if r["retrains"] != math.ceil((r["B"] - r["seed_size"]) / r["s"])]
    report(9, bool(records) and not bad,
           f"{len(records) - len(bad)}/{len(records)} (term, fold, s) runs match "
           f"ceil((B - seed)/s)")


def test_c10_cv_determinism(report, tmp_path):
    data_dir = tmp_path / "data"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert cli_main(["synth", "--n", "300", "--terms", "6", "--seed", "5",
                         "--out", str(data_dir)]) == 0
    cfg = data_dir / "synth.cfg"
    with open(cfg, "a", encoding="utf-8") as fh:
        fh.write(f"B_frac = {B_FRAC}\ns = 20\n")
    outs = []
    for name, workers in (("first", "1"), ("second", "2")):
        assert cli_main(["cv", "--config", str(cfg), "--workers", workers,
                         "--out", str(tmp_path / name)]) == 0
        outs.append({f: (tmp_path / name / f).read_bytes()
                     for f in ("report.tsv", "trace.tsv", "groups.tsv")})
    same = [f for f in outs[0] if outs[0][f] == outs[1][f]]
    report(10, len(same) == 3, f"{len(same)}/3 report TSVs byte-identical across two cv runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
