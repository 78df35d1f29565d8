"""Hilbert curve indexing on a power-of-two square grid.

Points are ``(row, col)``. The base 2x2 pattern visits ``(0,0), (1,0), (1,1),
(0,1)``; larger sides use the usual quadrant rotations, so every aligned
``2^k x 2^k`` block is a contiguous range of ranks.
"""

from __future__ import annotations

import numpy as np


def _check_side(side: int) -> None:
    if side < 1 or side & (side - 1):
        raise ValueError(f"side must be a positive power of 2, got {side}")


def hilbert_rank(p, side: int) -> int:
    """Rank of cell ``p = (row, col)`` along the curve."""
    _check_side(side)
    row, col = int(p[0]), int(p[1])
    if not (0 <= row < side and 0 <= col < side):
        raise ValueError(f"point {p} outside {side}x{side} grid")
    return int(hilbert_ranks(np.array([row]), np.array([col]), side)[0])


def hilbert_point(r: int, side: int) -> tuple[int, int]:
    """Inverse of :func:`hilbert_rank`."""
    _check_side(side)
    r = int(r)
    if not 0 <= r < side * side:
        raise ValueError(f"rank {r} outside [0, {side * side})")
    rows, cols = hilbert_points(np.array([r]), side)
    return int(rows[0]), int(cols[0])


def hilbert_ranks(rows, cols, side: int) -> np.ndarray:
    """Vectorised :func:`hilbert_rank` (x is the column, y the row)."""
    x = np.asarray(cols, dtype=np.int64).copy()
    y = np.asarray(rows, dtype=np.int64).copy()
    d = np.zeros_like(x)
    s = side // 2
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        # rotate the quadrant
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, side - 1 - x, x)
        y = np.where(flip, side - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s //= 2
    return d


def hilbert_points(ranks, side: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`hilbert_point`; returns ``(rows, cols)``."""
    t = np.asarray(ranks, dtype=np.int64).copy()
    x = np.zeros_like(t)
    y = np.zeros_like(t)
    s = 1
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, s - 1 - x, x)
        y = np.where(flip, s - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return y, x


def rank_grid(side: int) -> np.ndarray:
    """``side x side`` array whose entry ``[r, c]`` is the curve rank."""
    _check_side(side)
    rows, cols = np.indices((side, side))
    return hilbert_ranks(rows.ravel(), cols.ravel(), side).reshape(side, side)
