import numpy as np
import pytest

from meshmsf.mesh import Batch, MeshConfig, MeshMachine, Records


def make_batch(side, n_blocks=1, faithful=False, **cfg):
    m = MeshMachine(MeshConfig(side, **cfg), faithful=faithful)
    length = m.n // n_blocks
    return Batch(m, np.arange(n_blocks) * length, length)


def scatter(batch, n, rng, per_proc=2):
    """``n`` records on random processors of the batch, at most ``per_proc`` each."""
    cells = np.concatenate([np.arange(s, s + batch.length) for s in batch.starts])
    rank = np.sort(rng.choice(np.repeat(cells, per_proc), n, replace=False))
    slot = np.zeros(n, np.int64)
    for i in range(1, n):
        if rank[i] == rank[i - 1]:
            slot[i] = slot[i - 1] + 1
    return rank, slot


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_records(batch, n, rng, **fields):
    rank, slot = scatter(batch, n, rng)
    cols = {k: rng.integers(0, hi, n) for k, hi in fields.items()}
    return Records(rank=rank, slot=slot, **cols)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
