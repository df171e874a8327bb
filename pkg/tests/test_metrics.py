import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import block_patterns, brute_fmax, step_curve_aupr
from pu_negsel.metrics import (
    aupr,
    default_grid,
    fmax,
    precision_recall_at,
    prf,
    prf_from_predictions,
    rescale_scores,
)


def test_prf_examples():
    assert prf(3, 1, 3) == pytest.approx((0.75, 0.5, 0.6))
    assert prf(0, 0, 0) == (0.0, 0.0, 0.0)
    assert prf(5, 0, 0) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        prf(-1, 0, 0)


def test_prf_from_predictions():
    assert prf_from_predictions([1, 1, 0, 0], [1, 0, 1, 0]) == pytest.approx((0.5, 0.5, 0.5))


def test_aupr_perfect_ranking():
    assert aupr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0


@pytest.mark.parametrize("k", range(1, 7))
def test_single_positive_at_rank_k(k):
    scores = -np.arange(6.0)
    labels = np.zeros(6, int)
    labels[k - 1] = 1
    assert aupr(scores, labels) == pytest.approx(1 / k)


def test_aupr_without_positives_is_nan():
    assert math.isnan(aupr([0.1, 0.2], [0, 0]))


def test_aupr_tied_block_is_order_free():
    assert aupr([1, 1, 1, 0], [0, 1, 0, 1]) == aupr([1, 1, 1, 0], [1, 0, 0, 1])


@pytest.mark.parametrize("n", range(1, 7))
def test_aupr_every_block_pattern(n):
    rng = np.random.default_rng(n)
    for sizes, pos in block_patterns(n):
        if sum(pos) == 0:
            continue
        scores = np.repeat(np.sort(rng.random(len(sizes)))[::-1], sizes)
        labels = np.concatenate([np.r_[np.ones(p), np.zeros(s - p)] for s, p in zip(sizes, pos)])
        perm = rng.permutation(n)
        s, y = scores[perm], labels[perm].astype(int)
        assert aupr(s, y) == pytest.approx(step_curve_aupr(list(s), list(y)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.booleans()), min_size=1, max_size=12))
def test_aupr_in_unit_interval(items):
    scores = [s for s, _ in items]
    labels = [int(b) for _, b in items]
    v = aupr(scores, labels)
    if sum(labels):
        assert 0 < v <= 1
        assert v == pytest.approx(step_curve_aupr(scores, labels), abs=1e-12)


def test_rescale_scores():
    out = rescale_scores([[1.0, 3.0, 2.0], [5.0, 5.0, 5.0]])
    np.testing.assert_allclose(out, [[0, 1, 0.5], [0, 0, 0]])


def test_fmax_examples():
    assert fmax([[0.7]], [[1]], [0.5, 0.9]) == (1.0, 0.5, 1.0, 1.0)
    s = np.array([[0.9, 0.1], [0.2, 0.8]])
    assert fmax(s, np.array([[1, 0], [0, 1]])).fmax == 1.0


def test_fmax_three_instances_two_terms():
    s = np.array([[0.9, 0.4, 0.1], [0.3, 0.6, 0.7]])
    y = np.array([[1, 0, 0], [0, 1, 0]])
    grid = default_grid(11)
    got = fmax(s, y, grid)
    ref = brute_fmax(s.tolist(), y.tolist(), grid)
    assert got.fmax == pytest.approx(ref[0], abs=1e-12) and got.threshold == ref[1]


def test_fmax_random_against_brute_force():
    rng = np.random.default_rng(0)
    grid = default_grid()
    for _ in range(30):
        t, m = rng.integers(1, 4), rng.integers(1, 6)
        s = np.round(rng.random((t, m)), 2)
        y = rng.integers(0, 2, (t, m))
        got = fmax(s, y, grid)
        ref = brute_fmax(s.tolist(), y.tolist(), grid)
        assert abs(got.fmax - ref[0]) <= 1e-12


def test_coverage_variant_ignores_silent_instances():
    s = np.array([[0.9, 0.0]])
    y = np.array([[1, 1]])
    assert precision_recall_at(s, y, 0.5) == (0.5, 0.5)
    assert precision_recall_at(s, y, 0.5, coverage=True) == (1.0, 0.5)


def test_fmax_rejects_bad_input():
    with pytest.raises(ValueError):
        fmax([[np.nan]], [[1]])
    with pytest.raises(ValueError):
        fmax([[0.1, 0.2]], [[1]])
