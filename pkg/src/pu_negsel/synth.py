"""Planted-partition positive-unlabeled instances with planted label noise.

Every term owns a dense block of ``n_pos`` annotated nodes (edge
probability ``p_in``). The remaining nodes form the background, split into
``clusters`` communities (``p_bg`` inside a community, ``p_out`` between
any two different blocks or communities). For each term, ``noise``
background or foreign-block nodes are weakly characterized members: each
links to every annotated member with probability ``p_noisy``. Only the new
release annotates them, so they are the planted noisy negatives (V-+).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._seeding import derive_seed


@dataclass(frozen=True)
class SynthParams:
    n: int = 600
    clusters: int = 1
    p_in: float = 0.5
    p_bg: float = 0.05
    p_out: float = 0.002
    p_noisy: float = 0.1
    w_in: tuple = (700, 1000)
    w_out: tuple = (700, 1000)
    n_terms: int = 20
    n_pos: int = 15
    noise: int | None = None
    noise_frac: float = 0.10  # of each term's old-release negatives, used when noise is None
    seed: int = 0

    def noise_count(self) -> int:
        if self.noise is not None:
            return self.noise
        return int(round(self.noise_frac * (self.n - self.n_pos)))

    def check(self):
        for name in ("p_in", "p_bg", "p_out", "p_noisy"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.n_pos < 1 or self.n_terms < 1:
            raise ValueError("need n_pos >= 1 and n_terms >= 1")
        n_bg = self.n - self.n_terms * self.n_pos
        if n_bg < 0:
            raise ValueError(f"{self.n_terms} terms of {self.n_pos} positives need more than "
                             f"{self.n} nodes")
        if not 1 <= self.clusters <= max(n_bg, 1):
            raise ValueError("clusters must lie in [1, number of background nodes]")
        noise = self.noise_count()
        if noise < 0:
            raise ValueError("noise must be non-negative")
        if noise > self.n - self.n_pos:
            raise ValueError(f"noise count {noise} exceeds the {self.n - self.n_pos} negatives")


@dataclass
class SynthInstance:
    node_ids: list
    edges: list  # (i, j, weight) with i < j
    old: dict  # term -> sorted member indices
    new: dict
    noisy: dict


def _add_edge(weights, a, b, w):
    key = (int(min(a, b)), int(max(a, b)))
    weights[key] = max(w, weights.get(key, 0))


def generate(params: SynthParams) -> SynthInstance:
    params.check()
    rng = np.random.default_rng(derive_seed("synth", params.seed))
    n, n_pos, n_terms = params.n, params.n_pos, params.n_terms
    width = len(str(n - 1))
    node_ids = [f"P{i:0{width}d}" for i in range(n)]

    # block labels: 0..n_terms-1 for term blocks, then the background communities
    n_bg = n - n_terms * n_pos
    block = np.empty(n, dtype=np.int64)
    block[: n_terms * n_pos] = np.repeat(np.arange(n_terms), n_pos)
    block[n_terms * n_pos:] = n_terms + np.arange(n_bg) * params.clusters // max(n_bg, 1)
    block = block[rng.permutation(n)]  # node ids carry no information about blocks

    def draw_weight(lo_hi, size):
        lo, hi = lo_hi
        return rng.integers(lo, hi + 1, size=size)

    iu, ju = np.triu_indices(n, k=1)
    same = block[iu] == block[ju]
    is_term = block[iu] < n_terms
    prob = np.where(same, np.where(is_term, params.p_in, params.p_bg), params.p_out)
    take = rng.random(len(iu)) < prob
    w = np.where(same[take], draw_weight(params.w_in, take.sum()),
                 draw_weight(params.w_out, take.sum()))
    weights = {(int(i), int(j)): int(x) for i, j, x in zip(iu[take], ju[take], w)}

    old, new, noisy = {}, {}, {}
    noise = params.noise_count()
    t_width = len(str(max(n_terms - 1, 0)))
    for t in range(n_terms):
        term = f"GO:{t:0{t_width}d}"
        known = np.flatnonzero(block == t)
        others = np.flatnonzero(block != t)
        hidden = np.sort(rng.choice(others, size=noise, replace=False))
        links = rng.random((len(hidden), len(known))) < params.p_noisy
        for a, b in zip(*np.nonzero(links)):
            _add_edge(weights, hidden[a], known[b], int(draw_weight(params.w_in, None)))
        old[term] = known
        noisy[term] = hidden
        new[term] = np.union1d(known, hidden)
    edges = [(i, j, w) for (i, j), w in sorted(weights.items())]
    return SynthInstance(node_ids, edges, old, new, noisy)


def write_instance(inst: SynthInstance, params: SynthParams, out_dir) -> dict:
    """Write network.tsv, annotations_old.tsv, annotations_new.tsv and synth.cfg."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = "# pu_negsel synth " + " ".join(
        f"{k}={','.join(map(str, v)) if isinstance(v, tuple) else v}"
        for k, v in asdict(params).items()) + "\n"
    paths = {"network": out / "network.tsv", "annotations_old": out / "annotations_old.tsv",
             "annotations_new": out / "annotations_new.tsv", "config": out / "synth.cfg"}
    with open(paths["network"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("# nodes: " + " ".join(inst.node_ids) + "\n")
        for i, j, w in inst.edges:
            fh.write(f"{inst.node_ids[i]}\t{inst.node_ids[j]}\t{w}\n")
    for key, release in (("annotations_old", inst.old), ("annotations_new", inst.new)):
        with open(paths[key], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header)
            for term in sorted(release):
                for i in release[term]:
                    fh.write(f"{term}\t{inst.node_ids[i]}\n")
    with open(paths["config"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write(f"network = {paths['network'].name}\n")
        fh.write(f"annotations_old = {paths['annotations_old'].name}\n")
        fh.write(f"annotations_new = {paths['annotations_new'].name}\n")
        fh.write(f"min_pos = {params.n_pos}\nmax_pos = {params.n_pos}\n")
        fh.write(f"seed = {params.seed}\n")
    return paths


def to_dataset(inst: SynthInstance, threshold: float = 700.0):
    """In-memory equivalent of writing the instance and loading it back."""
    from .harness import Dataset
    from .labels import TemporalLabeling
    from .netio import RawNetwork, normalize

    kept = [(i, j, w) for i, j, w in inst.edges if w >= threshold]
    raw = RawNetwork(list(inst.node_ids), np.array([e[0] for e in kept], dtype=np.int64),
                     np.array([e[1] for e in kept], dtype=np.int64),
                     np.array([e[2] for e in kept], dtype=np.float64))
    g = normalize(raw)
    n = len(inst.node_ids)
    terms = []
    for term in sorted(set(inst.old) | set(inst.new)):
        y_old = np.zeros(n, dtype=np.int8)
        y_new = np.zeros(n, dtype=np.int8)
        y_old[inst.old.get(term, [])] = 1
        y_new[inst.new.get(term, [])] = 1
        terms.append(TemporalLabeling(term, y_old, y_new))
    return Dataset(g, terms)
