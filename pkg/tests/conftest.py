import numpy as np
import pytest

from pu_negsel.netio import from_dense


def two_cluster_graph(n=60, n_pos=15, p_in=0.4, p_out=0.01, seed=0):
    """Graph whose first ``n_pos`` nodes form one dense cluster, the rest another."""
    rng = np.random.default_rng(seed)
    blk = np.arange(n) < n_pos
    prob = np.where(blk[:, None] == blk[None, :], p_in, p_out)
    a = np.triu(rng.random((n, n)) < prob, 1).astype(float)
    a = a + a.T
    return from_dense(a), blk.astype(np.int8)


@pytest.fixture
def clusters():
    return two_cluster_graph()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return _write
