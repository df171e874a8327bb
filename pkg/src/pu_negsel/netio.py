"""Edge-list ingestion and symmetric degree normalization.

Input format: one undirected edge per line, ``<id_a> <id_b> <weight>``,
whitespace separated. ``#`` starts a comment line; a comment of the form
``# nodes: A B C`` declares nodes that may have no retained edges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import DataError

logger = logging.getLogger(__name__)

STRING_SCALE = 1000.0
DEFAULT_THRESHOLD = 700.0


@dataclass(frozen=True)
class RawNetwork:
    """Thresholded but unnormalized network.

    ``rows``/``cols`` hold each undirected edge once with ``rows < cols``.
    """

    node_ids: list[str]
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    def adjacency(self) -> sp.csr_matrix:
        n = self.n
        a = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights]),
             (np.concatenate([self.rows, self.cols]), np.concatenate([self.cols, self.rows]))),
            shape=(n, n),
        )
        return a.tocsr()


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        if len(self.indices) > 1 and np.any(np.diff(self.indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if np.any(self.values == 0):
            raise ValueError("explicit zeros are not stored")

    def __len__(self):
        return len(self.indices)

    def __getitem__(self, j: int) -> float:
        k = np.searchsorted(self.indices, j)
        if k < len(self.indices) and self.indices[k] == j:
            return float(self.values[k])
        return 0.0

    def dot(self, w: np.ndarray) -> float:
        return float(np.dot(w[self.indices], self.values))

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.values
        return out


@dataclass(frozen=True)
class WeightedGraph:
    """Normalized symmetric similarity graph; row ``i`` of ``W`` is node ``i``'s features."""

    W: sp.csr_matrix
    node_ids: list[str]
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.W.shape != (len(self.node_ids), len(self.node_ids)):
            raise ValueError("matrix shape does not match node count")
        if self._index is None:
            object.__setattr__(self, "_index", {u: i for i, u in enumerate(self.node_ids)})

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def index_of(self, node_id: str) -> int:
        return self._index[node_id]

    def rows(self, idx) -> sp.csr_matrix:
        return self.W[np.asarray(idx, dtype=np.int64)]


def _parse_weight(token, path, lineno):
    try:
        w = float(token)
    except ValueError:
        raise DataError(f"malformed weight {token!r}", path, lineno) from None
    if not np.isfinite(w):
        raise DataError(f"non-finite weight {token!r}", path, lineno)
    if w < 0:
        raise DataError(f"negative weight {w}", path, lineno)
    return w


def load_network(path, threshold: float = DEFAULT_THRESHOLD) -> RawNetwork:
    """Read an edge list, keeping edges with ``weight >= threshold``.

    Each undirected edge may appear once, or twice (both orientations) with
    the same weight. Repeated or conflicting entries raise :class:`DataError`.
    Self-loops are dropped.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    path = Path(path)
    if not path.exists():
        raise DataError("network file not found", path)

    declared: set[str] = set()
    seen: dict[tuple[str, str], tuple[float, bool]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("nodes:"):
                    declared.update(body[len("nodes:"):].split())
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DataError(f"expected 3 fields, got {len(parts)}", path, lineno)
            a, b, tok = parts
            w = _parse_weight(tok, path, lineno)
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            forward = a < b
            if key in seen:
                w_prev, fwd_prev = seen[key]
                if fwd_prev is None or fwd_prev == forward:
                    raise DataError(f"duplicate edge {a} {b}", path, lineno)
                if w_prev != w:
                    raise DataError(
                        f"edge {a} {b} listed in both directions with different weights", path, lineno
                    )
                # mark as fully consumed so a third copy is rejected
                seen[key] = (w, None)
                continue
            seen[key] = (w, forward)

    kept = [(a, b, w) for (a, b), (w, _) in seen.items() if w >= threshold]
    ids = set(declared)
    for a, b, _ in kept:
        ids.add(a)
        ids.add(b)
    node_ids = sorted(ids)
    index = {u: i for i, u in enumerate(node_ids)}

    kept.sort(key=lambda e: (index[e[0]], index[e[1]]))
    rows = np.array([index[a] for a, _, _ in kept], dtype=np.int64)
    cols = np.array([index[b] for _, b, _ in kept], dtype=np.int64)
    weights = np.array([w for _, _, w in kept], dtype=np.float64)
    logger.info("loaded %s: %d nodes, %d edges kept (%d below threshold %g)",
                path, len(node_ids), len(kept), len(seen) - len(kept), threshold)
    return RawNetwork(node_ids, rows, cols, weights)


def normalize(raw: RawNetwork, scale: float | None = STRING_SCALE) -> WeightedGraph:
    """Return ``D^{-1/2} A D^{-1/2}`` where ``A`` is the (rescaled) adjacency.

    ``scale`` divides the raw weights first (STRING scores live in
    [0, 1000]); pass ``None`` for inputs already in [0, 1]. Zero-degree
    nodes keep all-zero rows.
    """
    a = raw.adjacency().astype(np.float64)
    if scale is not None:
        a = a / scale
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])

    coo = a.tocoo()
    # elementwise a_ij / sqrt(d_i d_j); multiplying the two factors in a fixed
    # order keeps W[i, j] and W[j, i] bitwise equal
    lo = np.minimum(coo.row, coo.col)
    hi = np.maximum(coo.row, coo.col)
    vals = coo.data * inv_sqrt[lo] * inv_sqrt[hi]
    np.clip(vals, 0.0, 1.0, out=vals)
    w = sp.csr_matrix((vals, (coo.row, coo.col)), shape=a.shape)
    w.eliminate_zeros()
    w.sort_indices()
    return WeightedGraph(w, list(raw.node_ids))


def from_dense(adjacency, node_ids=None, scale=None) -> WeightedGraph:
    """Normalize a dense or sparse symmetric adjacency matrix directly."""
    a = sp.triu(sp.csr_matrix(adjacency), k=1).tocoo()
    n = a.shape[0]
    if node_ids is None:
        width = len(str(max(n - 1, 0)))
        node_ids = [f"n{i:0{width}d}" for i in range(n)]
    raw = RawNetwork(list(node_ids), a.row.astype(np.int64), a.col.astype(np.int64),
                     a.data.astype(np.float64))
    return normalize(raw, scale=scale)


def feature_vector(g: WeightedGraph, i: int) -> SparseVector:
    if not 0 <= i < g.n:
        raise IndexError(f"node index {i} out of range for graph with {g.n} nodes")
    start, end = g.W.indptr[i], g.W.indptr[i + 1]
    return SparseVector(g.W.indices[start:end].astype(np.int64), g.W.data[start:end].copy())


def write_network(g: WeightedGraph, path, header: str = "") -> None:
    """Write the normalized graph as an edge list (each undirected edge once)."""
    upper = sp.triu(g.W, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("# nodes: " + " ".join(g.node_ids) + "\n")
        for k in order:
            fh.write(f"{g.node_ids[upper.row[k]]}\t{g.node_ids[upper.col[k]]}\t{float(upper.data[k])!r}\n")
