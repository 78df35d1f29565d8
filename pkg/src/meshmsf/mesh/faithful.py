"""Step-by-step twins of the oblivious primitives.

Every word here crosses a link inside :meth:`MeshMachine.sync_step`, one
word per link per step, so the step counter ends where the direct versions
in :mod:`primitives` say it should. The test-suite runs both on the same
inputs and compares outputs and step counts.

Processors keep their working state (records in flight, partial
summaries) in arrays indexed by cell; the register file is left alone.
Only the vector stepping strategy is supported.
"""

from __future__ import annotations

import numpy as np

from ..errors import CapacityExceeded, ConfigurationError, ContractError
from . import cost
from .hilbert import hilbert_points, rank_grid
from .records import NULL_WORD, RECORD_WORDS, Batch, Records

_DIRS = {"E": (0, 1), "W": (0, -1), "S": (1, 0), "N": (-1, 0)}


def _check(batch: Batch) -> None:
    if batch.machine.strategy != "vector":
        raise ConfigurationError("the step-by-step primitives need the vector stepping strategy")


def _whole(machine):
    return (0, 0, machine.side, machine.side)


def _block_grid(batch: Batch) -> tuple[np.ndarray, np.ndarray]:
    """Per cell: block index (-1 outside the batch) and position in the block."""
    ranks = rank_grid(batch.machine.side)
    b = np.searchsorted(batch.starts, ranks, side="right") - 1
    inside = (b >= 0) & (ranks < batch.starts[np.maximum(b, 0)] + batch.length)
    b = np.where(inside, b, -1)
    pos = np.where(inside, ranks - batch.starts[np.maximum(b, 0)], -1)
    return b, pos


# --------------------------------------------------------------------- flooding
def _same_group(group: np.ndarray) -> dict[str, np.ndarray]:
    """Per direction: the neighbour on that side exists and is in the same group."""
    h, w = group.shape
    out = {}
    for d, (dr, dc) in _DIRS.items():
        ok = np.zeros((h, w), dtype=bool)
        src = (slice(max(0, -dr), h - max(0, dr)), slice(max(0, -dc), w - max(0, dc)))
        dst = (slice(max(0, dr), h - max(0, -dr)), slice(max(0, dc), w - max(0, -dc)))
        ok[src] = (group[src] == group[dst]) & (group[src] >= 0)
        out[d] = ok
    return out


def _flood_word(machine, start_mask, values, links, steps) -> np.ndarray:
    """Spread one word from the cells in ``start_mask`` for ``steps`` steps;
    every cell reached takes the value."""
    known = start_mask.copy()
    val = np.where(known, values, 0)

    def emit(regs, counts):
        return {d: (known & ok, val) for d, ok in links.items()}

    def absorb(regs, counts, inbound):
        for _, (mask, words) in inbound.items():
            new = mask & ~known
            val[new] = words[new]
            known[new] = True
        return regs, counts

    for _ in range(steps):
        machine.sync_step(_whole(machine), emit, absorb)
    return val


def hierarchical_flood(batch: Batch, summary: np.ndarray, combine, empty: np.ndarray):
    """Prefix, suffix and total summaries over each block, in curve order.

    ``summary`` is ``(side, side, words)``; ``combine(a, b)`` merges the
    summary of a curve stretch with the one right after it (arrays of the
    same shape). At each merge level every processor floods its child
    group's summary, word by word, across the parent group; the flood lasts
    the group's diameter, so every processor hears every sibling.
    """
    m = batch.machine
    blk, pos = _block_grid(batch)
    inside = blk >= 0
    own = summary.copy()
    prefix = np.broadcast_to(empty, summary.shape).copy()
    suffix = prefix.copy()
    sub = 1
    for g, children, diam in cost.scan_levels(batch.length):
        group = np.where(inside, blk * batch.length + pos // g, -1)
        child = np.where(inside, (pos // sub) % children, -1)
        links = _same_group(group)
        heard = []
        for i in range(children):
            words = [_flood_word(m, child == i, own[..., w], links, diam) for w in range(own.shape[-1])]
            heard.append(np.stack(words, axis=-1))
        before = np.broadcast_to(empty, summary.shape).copy()
        after = before.copy()
        for i in range(children):
            later = (child < i)[..., None]
            earlier = (child > i)[..., None]
            after = np.where(later, combine(after, heard[i]), after)
            before = np.where(earlier, combine(before, heard[i]), before)
        total = heard[0]
        for i in range(1, children):
            total = combine(total, heard[i])
        prefix = np.where(inside[..., None], combine(before, prefix), prefix)
        suffix = np.where(inside[..., None], combine(suffix, after), suffix)
        own = np.where(inside[..., None], total, own)
        sub = g
    return prefix, suffix, own


def _count_combine(a, b):
    return a + b


def block_counts(batch: Batch, local: np.ndarray) -> np.ndarray:
    """Every processor learns its block's total of ``local`` (one word each)."""
    _, _, total = hierarchical_flood(batch, local[..., None].astype(np.int64), _count_combine, np.zeros(1, np.int64))
    return total[..., 0]


# ------------------------------------------------------------------- sorting
class _Grid:
    """Shearsort coordinates of every cell: rows run along each block's long side."""

    def __init__(self, batch: Batch):
        side = batch.machine.side
        self.blk, self.pos = _block_grid(batch)
        self.inside = self.blk >= 0
        short, long_ = cost.block_dims(batch.length)
        self.short, self.long = short, long_
        rr, cc = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        self.row = np.full((side, side), -1)
        self.col = np.full((side, side), -1)
        self.transposed = np.zeros((side, side), dtype=bool)
        for b, s in enumerate(batch.starts):
            rows, cols = hilbert_points(np.arange(s, s + batch.length), side)
            r0, c0 = rows.min(), cols.min()
            h = rows.max() - r0 + 1
            sel = self.blk == b
            if h == short:
                self.row[sel], self.col[sel] = rr[sel] - r0, cc[sel] - c0
            else:
                self.row[sel], self.col[sel] = cc[sel] - c0, rr[sel] - r0
                self.transposed[sel] = True
        odd = self.row % 2 == 1
        self.snake = np.where(self.inside, self.row * long_ + np.where(odd, long_ - 1 - self.col, self.col), -1)

    def partners(self, along_row: bool, parity: int):
        """Per cell: physical direction to its partner ('' if idle) and whether
        it is the lower (keeps the smaller records) of the pair."""
        coord = self.col if along_row else self.row
        limit = self.long if along_row else self.short
        first = self.inside & (coord % 2 == parity) & (coord + 1 < limit)
        second = self.inside & ((coord - 1) % 2 == parity) & (coord >= 1)
        fwd = np.where(self.transposed, "S", "E") if along_row else np.where(self.transposed, "E", "S")
        back = np.where(fwd == "E", "W", "N")
        direction = np.where(first, fwd, np.where(second, back, ""))
        if along_row:
            # odd rows run backwards along the snake
            odd = self.row % 2 == 1
            lower = np.where(odd, second, first)
        else:
            lower = first
        return direction, lower


def _lex_sort_rows(words: np.ndarray, nkeys: int) -> np.ndarray:
    """Sort the last-but-one axis of ``words`` (..., k, RECORD_WORDS) on the first ``nkeys`` words."""
    idx = np.broadcast_to(np.arange(words.shape[-2]), words.shape[:-1]).copy()
    for j in range(nkeys - 1, -1, -1):
        key = np.take_along_axis(words[..., j], idx, axis=-1)
        idx = np.take_along_axis(idx, np.argsort(key, axis=-1, kind="stable"), axis=-1)
    return np.take_along_axis(words, idx[..., None], axis=-2)


def _shearsort(batch: Batch, grid: _Grid, data: np.ndarray, nkeys: int) -> np.ndarray:
    """Merge-split shearsort of ``data`` (side, side, c, RECORD_WORDS) into snake order."""
    m = batch.machine
    c = data.shape[2]
    data = _lex_sort_rows(data, nkeys)
    rp, cp = cost.shearsort_phases(grid.short)

    def round_(along_row, parity):
        direction, lower = grid.partners(along_row, parity)
        flat_out = data.reshape(data.shape[0], data.shape[1], -1)
        got = np.zeros_like(flat_out)
        masks = {d: direction == d for d in _DIRS}
        for q in range(c * RECORD_WORDS):
            def emit(regs, counts, q=q):
                return {d: (mk, flat_out[..., q]) for d, mk in masks.items()}

            def absorb(regs, counts, inbound, q=q):
                for _, (mk, words) in inbound.items():
                    got[..., q] = np.where(mk, words, got[..., q])
                return regs, counts

            m.sync_step(_whole(m), emit, absorb)
        active = direction != ""
        both = np.concatenate([data, got.reshape(data.shape)], axis=2)
        both = _lex_sort_rows(both, nkeys)
        keep = np.where(lower[..., None, None], both[:, :, :c], both[:, :, c:])
        return np.where(active[..., None, None], keep, data)

    for phase in range(rp):
        for t in range(cost.line_rounds(grid.long)):
            data = round_(True, t % 2)
        if phase < cp:
            for t in range(cost.line_rounds(grid.short)):
                data = round_(False, t % 2)
    return data


def mesh_sort_faithful(batch: Batch, recs: Records, keys, c: int) -> Records:
    """Sort every block by ``keys`` then curve position, ending spread evenly
    over the block in curve order (the same placement as the direct sort)."""
    _check(batch)
    m = batch.machine
    if 2 * c * RECORD_WORDS > m.config.word_capacity:
        raise CapacityExceeded(f"{c} records plus a neighbour's copy exceed {m.config.word_capacity} words")
    if len(keys) + 1 > RECORD_WORDS:
        raise ContractError(f"{len(keys)} sort keys do not fit a {RECORD_WORDS}-word record")
    side = m.side
    order = recs.curve_order()
    gpos = np.empty(len(recs), np.int64)
    gpos[order] = np.arange(len(recs))
    rows, cols = hilbert_points(recs["rank"], side)
    # records fill a processor's slots in curve order, whatever their labels
    r_sorted = recs["rank"][order]
    first = np.searchsorted(r_sorted, r_sorted, side="left")
    local = np.empty(len(recs), np.int64)
    local[order] = np.arange(len(recs)) - first

    data = np.full((side, side, c, RECORD_WORDS), NULL_WORD, dtype=np.int64)
    for j, k in enumerate(keys):
        data[rows, cols, local, j] = k
    nk = len(keys)
    data[rows, cols, local, nk] = gpos

    grid = _Grid(batch)
    data = _shearsort(batch, grid, data, nk + 1)

    # sorted index of every slot, then the block's total of real records
    real = data[..., nk] != NULL_WORD
    kidx = grid.snake[..., None] * c + np.arange(c)
    total = block_counts(batch, real.sum(axis=2))
    L = batch.length
    K = np.maximum(total, 1)[..., None]
    dest = (kidx * L) // K
    first_k = -(-(dest * K) // L)
    dslot = kidx - first_k

    # nulls become fillers for the slots nobody is destined to: processor p
    # of the block has c - n_p of them, n_p being the records it receives
    t = kidx - total[..., None]
    null_dest = np.zeros_like(t)
    null_slot = np.zeros_like(t)
    p_all = np.arange(L + 1)
    for i, j in zip(*np.nonzero(grid.inside & (real.sum(axis=2) < c))):
        k_tot = int(total[i, j])
        fb = p_all * c - (-(-(p_all * k_tot) // L))
        p = np.searchsorted(fb, t[i, j], side="right") - 1
        null_dest[i, j] = p
        null_slot[i, j] = c - (fb[p + 1] - fb[p]) + t[i, j] - fb[p]
    dest = np.where(real, dest, null_dest)
    dslot = np.where(real, dslot, null_slot)

    # where each curve position sits in the block's snake
    start = batch.starts[np.maximum(grid.blk, 0)]
    rr, cc = hilbert_points(np.arange(side * side), side)
    snake_of_rank = grid.snake[rr, cc]
    dsnake = snake_of_rank[np.clip(start[..., None] + dest, 0, side * side - 1)]
    key2 = dsnake * c + dslot

    data2 = np.full((side, side, c, RECORD_WORDS), NULL_WORD, dtype=np.int64)
    data2[..., 0] = np.where(grid.inside[..., None], key2, NULL_WORD)
    data2[..., 1] = np.where(real, data[..., nk], NULL_WORD)
    data2 = _shearsort(batch, grid, data2, 1)

    keep = grid.inside[..., None] & (data2[..., 1] != NULL_WORD)
    ii, jj, ss = np.nonzero(keep)
    src = data2[ii, jj, ss, 1]
    out = recs.take(order[src])
    out["rank"] = rank_grid(side)[ii, jj]
    out["slot"] = data2[ii, jj, ss, 0] % c
    return out.take(out.curve_order())


# ----------------------------------------------------------- segmented scans
def _lex_less(a, b):
    """Elementwise lexicographic ``a < b`` over the last axis."""
    lt = np.zeros(a.shape[:-1], dtype=bool)
    eq = np.ones(a.shape[:-1], dtype=bool)
    for j in range(a.shape[-1]):
        lt |= eq & (a[..., j] < b[..., j])
        eq &= a[..., j] == b[..., j]
    return lt


def _pick(a, b, op):
    take_b = _lex_less(b, a) if op == "min" else _lex_less(a, b)
    return np.where(take_b[..., None], b, a)


class _Summary:
    """Word layout of a run summary: first key, last key, head and tail
    aggregates, and the empty and uniform flags."""

    def __init__(self, nk: int, nv: int, op: str):
        self.nk, self.nv, self.op = nk, nv, op
        self.width = cost.summary_words(nk, nv)

    def parts(self, s):
        nk, nv = self.nk, self.nv
        return (s[..., :nk], s[..., nk:2 * nk], s[..., 2 * nk:2 * nk + nv],
                s[..., 2 * nk + nv:2 * nk + 2 * nv], s[..., -2], s[..., -1])

    def pack(self, first, last, head, tail, empty, uniform):
        return np.concatenate([first, last, head, tail, empty[..., None], uniform[..., None]], axis=-1)

    def empty(self) -> np.ndarray:
        e = np.full(self.width, NULL_WORD, dtype=np.int64)
        e[-2], e[-1] = 1, 1
        return e

    def combine(self, a, b):
        af, al, ah, at, ae, au = self.parts(a)
        bf, bl, bh, bt, be, bu = self.parts(b)
        join = np.all(al == bf, axis=-1)
        head = np.where((au.astype(bool) & join)[..., None], _pick(ah, bh, self.op), ah)
        tail = np.where((bu.astype(bool) & join)[..., None], _pick(at, bt, self.op), bt)
        both = self.pack(af, bl, head, tail, np.zeros_like(ae), (au.astype(bool) & bu.astype(bool) & join).astype(np.int64))
        out = np.where(ae.astype(bool)[..., None], b, both)
        return np.where((be.astype(bool) & ~ae.astype(bool))[..., None], a, out)


def segmented_reduce_faithful(batch: Batch, recs: Records, seg_keys, values, op: str):
    """Twin of :func:`primitives.segmented_reduce`: a local pass inside each
    processor, then a hierarchical flood of run summaries."""
    from .primitives import _runs

    _check(batch)
    if op not in ("min", "max"):
        raise ValueError(f"unknown op {op!r}")
    m = batch.machine
    side = m.side
    n = len(recs)
    order = recs.curve_order()
    _runs(batch, recs, seg_keys, order)  # contract check only
    S = _Summary(len(seg_keys), len(values), op)

    ks = np.stack([k[order] for k in seg_keys], axis=1) if seg_keys else np.zeros((n, 0), np.int64)
    vs = np.stack([v[order] for v in values], axis=1)
    rank = recs["rank"][order]
    # local runs: a new run at a processor's first record or a key change
    new = np.ones(n, dtype=bool)
    if n > 1:
        new[1:] = (rank[1:] != rank[:-1]) | np.any(ks[1:] != ks[:-1], axis=1)
    run = np.cumsum(new) - 1
    nr = int(run[-1]) + 1 if n else 0
    run_agg = np.full((nr, len(values)), NULL_WORD if op == "min" else -NULL_WORD, dtype=np.int64)
    for i in range(n):
        cur = run_agg[run[i]]
        run_agg[run[i]] = _pick(cur[None], vs[i][None], op)[0]

    rows, cols = hilbert_points(rank, side)
    summary = np.broadcast_to(S.empty(), (side, side, S.width)).copy()
    proc_first = np.ones(n, dtype=bool)
    proc_first[1:] = rank[1:] != rank[:-1]
    proc_last = np.ones(n, dtype=bool)
    proc_last[:-1] = rank[1:] != rank[:-1]
    fi, li = np.flatnonzero(proc_first), np.flatnonzero(proc_last)
    uniform = run[fi] == run[li]
    local = S.pack(ks[fi], ks[li], run_agg[run[fi]], run_agg[run[li]], np.zeros(len(fi), np.int64), uniform.astype(np.int64))
    summary[rows[fi], cols[fi]] = local

    prefix, suffix, _ = hierarchical_flood(batch, summary, S.combine, S.empty())

    pf = prefix[rows, cols]
    sf = suffix[rows, cols]
    _, p_last, _, p_tail, p_empty, _ = S.parts(pf)
    s_first, _, s_head, _, s_empty, _ = S.parts(sf)
    agg = run_agg[run].copy()
    first_run = run == run[fi][np.cumsum(proc_first) - 1]
    last_run = run == run[li][np.cumsum(proc_first) - 1]
    left = first_run & ~p_empty.astype(bool) & np.all(p_last == ks, axis=1)
    right = last_run & ~s_empty.astype(bool) & np.all(s_first == ks, axis=1)
    agg = np.where(left[:, None], _pick(agg, p_tail, op), agg)
    agg = np.where(right[:, None], _pick(agg, s_head, op), agg)
    head_sorted = new & ~left

    out = [np.empty(n, np.int64) for _ in values]
    for j, o in enumerate(out):
        o[order] = agg[:, j]
    head = np.empty(n, dtype=bool)
    head[order] = head_sorted
    return out, head
