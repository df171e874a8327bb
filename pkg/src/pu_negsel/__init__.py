"""Positive-unlabeled classification on weighted similarity networks.

Active-learning negative selection paired with imbalance-aware learners
(cost-sensitive linear SVM, class-balanced random forest), plus the
evaluation harness used to compare them.
"""

from .netio import RawNetwork, SparseVector, WeightedGraph, feature_vector, load_network, normalize
from .labels import (
    FoldPlan,
    Labeling,
    TemporalLabeling,
    filter_terms,
    load_annotations,
    stratified_folds,
    temporal_sets,
)
from .learner import Model, TrainingSet, learn, lcp, update
from .negsel import SelectionConfig, SelectionTrace, rho, select_negatives
from .svm import ConvergenceWarning, Hyperplane, SVMConfig, margin, train_cs_svm
from .forest import Forest, ForestConfig, entropy, sample_bootstrap, train_forest

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning",
    "FoldPlan",
    "Forest",
    "ForestConfig",
    "Hyperplane",
    "Labeling",
    "Model",
    "RawNetwork",
    "SVMConfig",
    "SelectionConfig",
    "SelectionTrace",
    "SparseVector",
    "TemporalLabeling",
    "TrainingSet",
    "WeightedGraph",
    "entropy",
    "feature_vector",
    "filter_terms",
    "lcp",
    "learn",
    "load_annotations",
    "load_network",
    "margin",
    "normalize",
    "rho",
    "sample_bootstrap",
    "select_negatives",
    "stratified_folds",
    "temporal_sets",
    "train_cs_svm",
    "train_forest",
    "update",
]
