"""Per-term label vectors, temporal holdout sets, term filtering and folds."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._seeding import derive_seed
from .exceptions import DataError

logger = logging.getLogger(__name__)


def _as_binary(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("label vector must be one-dimensional")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    y = y.astype(np.int8)
    y.setflags(write=False)
    return y


@dataclass(frozen=True)
class Labeling:
    term_id: str
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _as_binary(self.y))

    @property
    def positives(self) -> np.ndarray:
        return np.flatnonzero(self.y == 1)

    @property
    def negatives(self) -> np.ndarray:
        return np.flatnonzero(self.y == 0)

    @property
    def num_positives(self) -> int:
        return int(self.y.sum())


@dataclass(frozen=True)
class TemporalLabeling:
    """Two releases of the same term; ``y_old`` is used for training."""

    term_id: str
    y_old: np.ndarray
    y_new: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y_old", _as_binary(self.y_old))
        object.__setattr__(self, "y_new", _as_binary(self.y_new))
        if len(self.y_old) != len(self.y_new):
            raise ValueError("releases have different lengths")

    @classmethod
    def static(cls, labeling: Labeling) -> "TemporalLabeling":
        """Single-release labeling seen as an unchanged temporal pair."""
        return cls(labeling.term_id, labeling.y, labeling.y)

    @property
    def old(self) -> Labeling:
        return Labeling(self.term_id, self.y_old)

    @property
    def new(self) -> Labeling:
        return Labeling(self.term_id, self.y_new)


class TemporalSets(NamedTuple):
    positives: np.ndarray
    stable_negatives: np.ndarray
    noisy: np.ndarray
    revoked: np.ndarray


def temporal_sets(t: TemporalLabeling) -> TemporalSets:
    """Split nodes into V+ (old positives), V-- (0 -> 0) and V-+ (0 -> 1).

    ``revoked`` (1 -> 0) is a subset of ``positives``; it is reported
    separately and never enters either holdout set.
    """
    old, new = t.y_old, t.y_new
    return TemporalSets(
        positives=np.flatnonzero(old == 1),
        stable_negatives=np.flatnonzero((old == 0) & (new == 0)),
        noisy=np.flatnonzero((old == 0) & (new == 1)),
        revoked=np.flatnonzero((old == 1) & (new == 0)),
    )


def read_annotations(path, node_ids) -> tuple[list[Labeling], int]:
    """Parse a ``term<TAB>node`` file; returns labelings and the skipped-line count."""
    path = Path(path)
    if not path.exists():
        raise DataError("annotation file not found", path)
    index = {u: i for i, u in enumerate(node_ids)}
    members: dict[str, set[int]] = {}
    unknown = 0
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            parts = [p.strip() for p in parts]
            if len(parts) != 2 or not all(parts):
                raise DataError("expected '<term_id>\\t<node_id>'", path, lineno)
            term, node = parts
            i = index.get(node)
            if i is None:
                unknown += 1
                if len(examples) < 5:
                    examples.append(node)
                continue
            members.setdefault(term, set()).add(i)
    if unknown:
        logger.warning("%s: skipped %d annotation(s) with unknown node ids (e.g. %s)", path,
                       unknown, ", ".join(examples))
    n = len(node_ids)
    out = []
    for term in sorted(members):
        y = np.zeros(n, dtype=np.int8)
        y[sorted(members[term])] = 1
        out.append(Labeling(term, y))
    return out, unknown


def load_annotations(path, node_ids) -> list[Labeling]:
    return read_annotations(path, node_ids)[0]


def load_temporal(old_path, new_path, node_ids) -> list[TemporalLabeling]:
    """Pair two releases by term id; a term missing from one release is all-zero there."""
    n = len(node_ids)
    old = {lab.term_id: lab.y for lab in load_annotations(old_path, node_ids)}
    new = {lab.term_id: lab.y for lab in load_annotations(new_path, node_ids)}
    zeros = np.zeros(n, dtype=np.int8)
    return [
        TemporalLabeling(term, old.get(term, zeros), new.get(term, zeros))
        for term in sorted(set(old) | set(new))
    ]


def filter_terms(labelings, min_pos: int, max_pos: int) -> list:
    """Keep terms whose (old-release) positive count lies in ``[min_pos, max_pos]``."""
    if min_pos > max_pos:
        raise ValueError("min_pos must not exceed max_pos")
    out = []
    for lab in labelings:
        y = lab.y_old if isinstance(lab, TemporalLabeling) else lab.y
        if min_pos <= int(y.sum()) <= max_pos:
            out.append(lab)
    return out


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray

    def test_nodes(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_nodes(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def term_seed(seed: int, term_id: str) -> int:
    return derive_seed("folds", seed, term_id)


def stratified_folds(t: TemporalLabeling, k: int, rng_seed: int) -> FoldPlan:
    """Assign every node to one of ``k`` folds, balancing V+, V-- and V-+ separately.

    Each stratum is shuffled independently and dealt round-robin; the dealing
    position carries over between strata so fold totals stay balanced too.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(rng_seed)
    sets = temporal_sets(t)
    assignment = np.full(len(t.y_old), -1, dtype=np.int64)
    offset = 0
    for name, stratum in (("V+", sets.positives), ("V--", sets.stable_negatives),
                          ("V-+", sets.noisy)):
        if 0 < len(stratum) < k:
            warnings.warn(
                f"term {t.term_id}: stratum {name} has {len(stratum)} < {k} members; "
                "some folds get none",
                stacklevel=2,
            )
        perm = rng.permutation(stratum)
        assignment[perm] = (offset + np.arange(len(perm))) % k
        offset = (offset + len(perm)) % k
    assignment.setflags(write=False)
    return FoldPlan(k, assignment)
