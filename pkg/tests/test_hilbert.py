import numpy as np
import pytest
from hypothesis import given, strategies as st

from meshmsf.mesh.hilbert import hilbert_point, hilbert_points, hilbert_rank, hilbert_ranks, rank_grid


def test_base_pattern():
    # the first four cells of every curve: down the left column, then across
    assert [hilbert_point(r, 2) for r in range(4)] == [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.mark.parametrize("side", [1, 2, 4, 8, 16])
def test_bijection_and_adjacency(side):
    ranks = np.arange(side * side)
    rows, cols = hilbert_points(ranks, side)
    assert len(set(zip(rows.tolist(), cols.tolist()))) == side * side
    assert (hilbert_ranks(rows, cols, side) == ranks).all()
    step = np.abs(np.diff(rows)) + np.abs(np.diff(cols))
    assert (step == 1).all()


@pytest.mark.parametrize("side", [4, 8, 16])
def test_aligned_blocks_are_squares(side):
    grid = rank_grid(side)
    for k in range(1, int(np.log2(side)) + 1):
        q = 4 ** k // 4
        for start in range(0, side * side, 4 * q):
            for i in range(4):
                r, c = np.nonzero((grid >= start + i * q) & (grid < start + (i + 1) * q))
                h, w = r.max() - r.min() + 1, c.max() - c.min() + 1
                assert h * w == q and h == w


@given(st.integers(0, 6).flatmap(lambda k: st.tuples(st.just(2 ** k), st.integers(0, 4 ** k - 1))))
def test_scalar_matches_vector(case):
    side, r = case
    p = hilbert_point(r, side)
    assert hilbert_rank(p, side) == r
    rows, cols = hilbert_points([r], side)
    assert (int(rows[0]), int(cols[0])) == p


def test_rejects_bad_side():
    with pytest.raises(ValueError):
        hilbert_rank((0, 0), 6)
    with pytest.raises(ValueError):
        hilbert_point(16, 4)
