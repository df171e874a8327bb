import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import two_cluster_graph
from pu_negsel.exceptions import DegenerateTrainingSetError
from pu_negsel.forest import (
    LN2,
    Forest,
    ForestConfig,
    TreeArrays,
    entropy,
    sample_bootstrap,
    train_forest,
)
from pu_negsel.learner import TrainingSet


def _leaf(vote):
    one = np.array([-1])
    return TreeArrays(one, one, np.array([-2]), np.array([-2.0]), np.array([vote], np.int8), 0)


def test_entropy_values():
    assert entropy(0.5) == pytest.approx(math.log(2), abs=1e-12)
    assert entropy(0.0) == 0.0 and entropy(1.0) == 0.0
    assert entropy(0.25) == pytest.approx(-0.25 * math.log(0.25) - 0.75 * math.log(0.75))
    assert entropy(0.25) == pytest.approx(0.562335, abs=1e-6)
    np.testing.assert_allclose(entropy(np.array([0.0, 0.5])), [0.0, LN2])


@given(st.floats(0, 1))
def test_entropy_symmetric_and_bounded(p):
    assert entropy(p) == pytest.approx(entropy(1 - p), abs=1e-12)
    assert 0 <= entropy(p) <= LN2 + 1e-15


def test_entropy_rejects_out_of_range():
    with pytest.raises(ValueError):
        entropy(1.5)


def test_vote_fraction():
    trees = [_leaf(1)] * 73 + [_leaf(0)] * 127
    f = Forest(trees, 200, 10, 1, 0, 1)
    assert f.predict_proba(np.zeros((1, 1)))[0] == pytest.approx(0.365)
    f = Forest([_leaf(1)] * 5, 5, 10, 1, 0, 1)
    assert f.predict_proba(np.zeros((3, 1))).tolist() == [1.0, 1.0, 1.0]


def test_bootstrap_probabilities():
    ts = TrainingSet(np.arange(5), np.arange(5, 505))
    draws = sample_bootstrap(ts, 200_000, np.random.default_rng(0))
    counts = np.bincount(draws, minlength=505) / len(draws)
    np.testing.assert_allclose(counts[:5], 0.1, atol=0.005)
    assert abs(counts[5:].mean() - 0.001) < 1e-5


def test_bootstrap_needs_both_classes():
    with pytest.raises(DegenerateTrainingSetError):
        sample_bootstrap(TrainingSet([], [1, 2]), 10, np.random.default_rng(0))


def test_separable_clusters_fit_exactly():
    g, y = two_cluster_graph(n=60, n_pos=15, p_in=0.5, p_out=0.0)
    f = train_forest(g.W, y, ForestConfig(num_trees=200), seed=1)
    assert np.array_equal((f.predict_proba(g.W) > 0.5).astype(int), y)


def test_single_tree_is_binary():
    g, y = two_cluster_graph(seed=2)
    p = train_forest(g.W, y, ForestConfig(num_trees=1), seed=0).predict_proba(g.W)
    assert set(np.unique(p)) <= {0.0, 1.0}


def test_same_seed_same_probabilities():
    g, y = two_cluster_graph(seed=3)
    cfg = ForestConfig(num_trees=20)
    a = train_forest(g.W, y, cfg, seed=9).predict_proba(g.W)
    b = train_forest(g.W, y, cfg, seed=9).predict_proba(g.W)
    assert np.array_equal(a, b)


def test_tree_traversal_matches_sklearn():
    from sklearn.tree import DecisionTreeClassifier

    rng = np.random.default_rng(0)
    X = rng.random((80, 6)).astype(np.float32)
    y = (X[:, 0] + X[:, 3] > 1).astype(int)
    est = DecisionTreeClassifier(random_state=0).fit(X, y)
    assert np.array_equal(TreeArrays.from_sklearn(est, 0).predict(X), est.predict(X))
