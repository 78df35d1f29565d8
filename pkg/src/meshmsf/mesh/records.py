"""Record sets held by the mesh and the batches of blocks they live in.

A record sits in one processor, identified by its global curve ``rank``, at
position ``slot`` among that processor's records. Every other field is one
word. Null padding is implicit: empty slots are simply absent.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .hilbert import hilbert_points

# fixed width of a record as it travels over a link
RECORD_WORDS = 8
# null sentinel: every real label and weight is strictly below it
NULL_WORD = np.int64(2**62)
MIN_WORD = np.int64(-(2**62))


class Records:
    """Column store of records; ``rank`` and ``slot`` give their placement."""

    __slots__ = ("cols",)

    def __init__(self, **cols):
        n = None
        out = {}
        for k, v in cols.items():
            a = np.asarray(v, dtype=np.int64)
            if a.ndim != 1:
                a = a.reshape(-1)
            if n is None:
                n = len(a)
            elif len(a) != n:
                raise ValueError(f"column {k} has length {len(a)}, expected {n}")
            out[k] = a
        self.cols = out

    @classmethod
    def empty(cls, *names) -> "Records":
        return cls(**{k: np.zeros(0, np.int64) for k in names})

    def __len__(self) -> int:
        for v in self.cols.values():
            return len(v)
        return 0

    def __getitem__(self, key):
        return self.cols[key]

    def __setitem__(self, key, value):
        a = np.asarray(value, dtype=np.int64)
        if a.ndim == 0:
            a = np.full(len(self), a, dtype=np.int64)
        if len(self.cols) and len(a) != len(self):
            raise ValueError("column length mismatch")
        self.cols[key] = a

    def __contains__(self, key) -> bool:
        return key in self.cols

    def keys(self):
        return self.cols.keys()

    def take(self, idx) -> "Records":
        return Records(**{k: v[idx] for k, v in self.cols.items()})

    def copy(self) -> "Records":
        return Records(**{k: v.copy() for k, v in self.cols.items()})

    def select(self, *names) -> "Records":
        return Records(**{k: self.cols[k] for k in names})

    @staticmethod
    def concat(parts) -> "Records":
        parts = [p for p in parts if p is not None]
        names = list(parts[0].keys())
        for p in parts[1:]:
            if set(p.keys()) != set(names):
                raise ValueError(f"cannot concatenate records with fields {sorted(p.keys())} and {sorted(names)}")
        return Records(**{k: np.concatenate([p[k] for p in parts]) for k in names})

    def curve_order(self) -> np.ndarray:
        return np.lexsort((self["slot"], self["rank"]))

    def __repr__(self):
        return f"Records(n={len(self)}, fields={list(self.cols)})"


class Batch:
    """Equal-sized blocks of consecutive curve ranks processed concurrently.

    ``length`` is the number of processors per block: a power of 4 for an
    aligned square, or twice a power of 4 for the curve-first half of one.
    """

    def __init__(self, machine, starts, length: int):
        self.machine = machine
        self.starts = np.asarray(starts, dtype=np.int64).reshape(-1)
        self.length = int(length)
        k = self.length
        while k % 4 == 0:
            k //= 4
        if k not in (1, 2):
            raise ValueError(f"block length {length} is not 4^k or 2*4^k")
        if len(self.starts) and (self.starts % self.length).any():
            raise ValueError("blocks must be aligned to their length")

    @classmethod
    def root(cls, machine) -> "Batch":
        return cls(machine, [0], machine.n)

    @property
    def cap(self) -> int:
        return self.machine.config.record_capacity

    @property
    def n_blocks(self) -> int:
        return len(self.starts)

    @property
    def is_square(self) -> bool:
        k = self.length
        while k % 4 == 0:
            k //= 4
        return k == 1

    def block_of(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=np.int64)
        b = np.searchsorted(self.starts, ranks, side="right") - 1
        if len(ranks) and ((b < 0) | (ranks >= self.starts[np.maximum(b, 0)] + self.length)).any():
            raise ValueError("record placed outside every block of the batch")
        return b

    def quadrants(self) -> "Batch":
        if not self.is_square or self.length < 4:
            raise ValueError("only square blocks of side >= 2 split into quadrants")
        q = self.length // 4
        starts = (self.starts[:, None] + q * np.arange(4)[None, :]).reshape(-1)
        return Batch(self.machine, starts, q)

    def first(self, length: int) -> "Batch":
        """The curve-first ``length`` processors of every block."""
        if length > self.length:
            raise ValueError("sub-block larger than block")
        return Batch(self.machine, self.starts, length)

    def first_half(self) -> "Batch":
        return self.first(self.length // 2)

    def split(self, length: int) -> "Batch":
        """Every aligned sub-block of ``length`` processors."""
        k = self.length // length
        starts = (self.starts[:, None] + length * np.arange(k)[None, :]).reshape(-1)
        return Batch(self.machine, starts, length)

    @cached_property
    def shapes(self) -> np.ndarray:
        """``(n_blocks, 2)`` array of (height, width) of each block's cells."""
        out = np.zeros((self.n_blocks, 2), dtype=np.int64)
        for i, s in enumerate(self.starts):
            rows, cols = hilbert_points(np.arange(s, s + self.length), self.machine.side)
            out[i] = (rows.max() - rows.min() + 1, cols.max() - cols.min() + 1)
        return out

    def __repr__(self):
        return f"Batch(blocks={self.n_blocks}, length={self.length})"
