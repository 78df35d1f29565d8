"""Exact lengths of the oblivious schedules used by the primitives.

Both the direct implementations in :mod:`primitives` and the step-by-step
ones in :mod:`faithful` are charged (or count) these lengths.
"""

from __future__ import annotations

import math

from .records import RECORD_WORDS


def block_dims(length: int) -> tuple[int, int]:
    """(short, long) side of a block of ``length`` processors."""
    k = int(round(math.log2(length)))
    if 1 << k != length:
        raise ValueError(f"block length {length} is not a power of 2")
    short = 1 << (k // 2)
    return short, length // short


def line_rounds(p: int) -> int:
    """Rounds of odd-even transposition that sort a line of ``p`` processors."""
    return p if p >= 2 else 0


def shearsort_phases(rows: int) -> tuple[int, int]:
    """(row phases, column phases) of shearsort on a grid with ``rows`` rows."""
    col_phases = int(math.ceil(math.log2(rows))) if rows > 1 else 0
    return col_phases + 1, col_phases


def shearsort_rounds(length: int) -> int:
    """Merge-split rounds of one shearsort; rows run along the long side."""
    short, long_ = block_dims(length)
    rp, cp = shearsort_phases(short)
    return rp * line_rounds(long_) + cp * line_rounds(short)


def sort_steps(length: int, per_proc: int) -> int:
    """Steps of ``mesh_sort``: a shearsort into snake order, a count of the
    block's records (to spread them evenly), then a second shearsort keyed on
    destination that moves everything into curve order. Each merge-split
    round swaps ``per_proc`` records of RECORD_WORDS words."""
    return 2 * per_proc * RECORD_WORDS * shearsort_rounds(length) + count_steps(length)


def summary_words(key_words: int, value_words: int) -> int:
    # first/last key, head/tail aggregate, "empty" and "uniform" flags
    return 2 * key_words + 2 * value_words + 2


def scan_levels(length: int) -> list[tuple[int, int, int]]:
    """``(group_length, children, diameter)`` for each merge level of a scan."""
    out = []
    g = 1
    while g < length:
        children = 4 if 4 * g <= length else 2
        g *= children
        short, long_ = block_dims(g)
        out.append((g, children, (short - 1) + (long_ - 1)))
    return out


def scan_steps(length: int, key_words: int, value_words: int) -> int:
    """Steps of one segmented scan: at each level every processor floods the
    sibling summaries across its group, one word per link per step."""
    sw = summary_words(key_words, value_words)
    return sum(diam * children * sw for _, children, diam in scan_levels(length))


def count_steps(length: int) -> int:
    """Steps of a block-wide total whose summary is a single word."""
    return sum(diam * children for _, children, diam in scan_levels(length))
