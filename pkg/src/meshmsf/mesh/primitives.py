"""Step-counted building blocks over batches of blocks.

Every primitive works on all blocks of a :class:`Batch` at once (the blocks
run concurrently, so one schedule's length is charged). Orderings are along
the Hilbert curve, which restricted to an aligned block is again a curve
through that block.
"""

from __future__ import annotations

import numpy as np

from ..errors import CapacityExceeded, ContractError
from . import cost
from .records import MIN_WORD, NULL_WORD, Batch, Records


def _as_list(x):
    if isinstance(x, (list, tuple)):
        return [np.asarray(a, dtype=np.int64) for a in x]
    return [np.asarray(x, dtype=np.int64)]


def lex_cmp(a, b) -> np.ndarray:
    """Elementwise lexicographic comparison of two tuples of arrays (-1, 0, 1)."""
    out = np.zeros(len(a[0]), dtype=np.int64)
    undecided = np.ones(len(a[0]), dtype=bool)
    for x, y in zip(a, b):
        lt = undecided & (x < y)
        gt = undecided & (x > y)
        out[lt] = -1
        out[gt] = 1
        undecided &= x == y
    return out


def per_processor(recs: Records) -> int:
    if not len(recs):
        return 0
    return int(np.bincount(recs["rank"] - recs["rank"].min()).max())


def _slots_for(batch: Batch, recs: Records, check: bool = True) -> int:
    c = max(batch.cap, per_processor(recs))
    limit = batch.machine.config.scratch_records
    if check and c > limit:
        raise CapacityExceeded(f"{c} records in one processor exceed the {limit} it can hold")
    return c


def _local_index(blk: np.ndarray, n_blocks: int) -> np.ndarray:
    """Position of each element within its block, for ``blk`` already grouped."""
    counts = np.bincount(blk, minlength=n_blocks)
    first = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.arange(len(blk)) - first[blk]


def _place_evenly(out: Records, b: np.ndarray, target: Batch) -> None:
    """Give the ``k``-th of ``K`` records of block ``b`` (already grouped and in
    order) processor ``k * L // K`` of the target block, so no processor holds
    more than ``ceil(K / L)`` and curve order follows record order."""
    k = _local_index(b, target.n_blocks)
    total = np.bincount(b, minlength=target.n_blocks)[b]
    proc = (k * target.length) // np.maximum(total, 1)
    out["rank"] = target.starts[b] + proc
    new = np.ones(len(k), dtype=bool)
    new[1:] = (proc[1:] != proc[:-1]) | (b[1:] != b[:-1])
    start_idx = np.maximum.accumulate(np.where(new, np.arange(len(k)), 0))
    out["slot"] = np.arange(len(k)) - start_idx


# ---------------------------------------------------------------------- sort
def mesh_sort(batch: Batch, recs: Records, keys) -> Records:
    """Sort each block's records by ``keys`` (most significant first) into curve
    order, spread evenly over the block. Ties keep curve order, so the output
    is a deterministic function of the input.

    The schedule works on ``c = max(record_capacity, current per-processor
    maximum)`` slots per processor, which sets its length."""
    keys = _as_list(keys)
    m = batch.machine
    c = _slots_for(batch, recs)
    if m.faithful and len(recs):
        from .faithful import mesh_sort_faithful

        return mesh_sort_faithful(batch, recs, keys, c)
    blk = batch.block_of(recs["rank"])
    order = np.lexsort(tuple([recs["slot"], recs["rank"]] + keys[::-1] + [blk]))
    out = recs.take(order)
    _place_evenly(out, blk[order], batch)
    m.advance(cost.sort_steps(batch.length, c))
    return out


# ------------------------------------------------------------ segmented scans
def _runs(batch: Batch, recs: Records, seg_keys, order):
    """Run ids of records (given in curve ``order``) and the contract check."""
    blk = batch.block_of(recs["rank"][order])
    ks = [k[order] for k in seg_keys]
    n = len(order)
    new = np.ones(n, dtype=bool)
    if n > 1:
        same_blk = blk[1:] == blk[:-1]
        cmp = lex_cmp([k[:-1] for k in ks], [k[1:] for k in ks])
        if (same_blk & (cmp > 0)).any():
            raise ContractError("records are not sorted by segment key along the curve")
        new[1:] = ~same_blk | (cmp != 0)
    return np.cumsum(new) - 1, new


def segmented_reduce(batch: Batch, recs: Records, seg_keys, values, op: str = "min"):
    """Lexicographic min or max of ``values`` over each maximal run of equal
    ``seg_keys`` along the curve. Returns ``(aggregate columns, is_run_head)``
    aligned with ``recs``. Realised as one forward and one backward sweep."""
    seg_keys = _as_list(seg_keys)
    values = _as_list(values)
    m = batch.machine
    if m.faithful and len(recs):
        from .faithful import segmented_reduce_faithful

        return segmented_reduce_faithful(batch, recs, seg_keys, values, op)
    n = len(recs)
    order = recs.curve_order()
    run, head_sorted = _runs(batch, recs, seg_keys, order)
    vals = [v[order] for v in values]
    agg = [np.zeros(n, np.int64) for _ in values]
    if n:
        by_val = np.lexsort(tuple(vals[::-1] + [run]))
        r = run[by_val]
        if op == "min":
            pick = by_val[np.concatenate(([True], r[1:] != r[:-1]))]
        elif op == "max":
            pick = by_val[np.concatenate((r[1:] != r[:-1], [True]))]
        else:
            raise ValueError(f"unknown op {op!r}")
        for a, v in zip(agg, vals):
            a[:] = v[pick][run]
    out = [np.empty(n, np.int64) for _ in values]
    head = np.empty(n, dtype=bool)
    for o, a in zip(out, agg):
        o[order] = a
    head[order] = head_sorted
    m.advance(cost.scan_steps(batch.length, len(seg_keys), len(values)))
    return out, head


def run_heads(batch: Batch, recs: Records, seg_keys) -> np.ndarray:
    """True for the first record of every run of equal ``seg_keys``."""
    _, head = segmented_reduce(batch, recs, seg_keys, [np.zeros(len(recs), np.int64)], "min")
    return head


def segmented_min(batch: Batch, recs: Records, seg_keys, value_keys) -> np.ndarray:
    """Flag the unique minimum of each run under the (total) value order."""
    value_keys = _as_list(value_keys)
    agg, _ = segmented_reduce(batch, recs, seg_keys, value_keys, "min")
    flag = np.ones(len(recs), dtype=bool)
    for a, v in zip(agg, value_keys):
        flag &= a == v
    if flag.any():
        order = recs.curve_order()
        run, _ = _runs(batch, recs, _as_list(seg_keys), order)
        if np.bincount(run[flag[order]]).max() > 1:
            raise ContractError("value order is not total within a segment")
    return flag


def segmented_broadcast(batch: Batch, recs: Records, seg_keys, source, payload):
    """Copy the payload of the (at most one) source of each run to the whole
    run. Returns ``(payload columns, received)``; records in runs without a
    source keep their own payload and get ``received = False``."""
    seg_keys = _as_list(seg_keys)
    payload = _as_list(payload)
    source = np.asarray(source, dtype=bool)
    if source.any():
        order = recs.curve_order()
        run, _ = _runs(batch, recs, seg_keys, order)
        if np.bincount(run[source[order]]).max() > 1:
            raise ContractError("two broadcast sources in one segment")
    vals = [source.astype(np.int64)] + [np.where(source, p, MIN_WORD) for p in payload]
    agg, _ = segmented_reduce(batch, recs, seg_keys, vals, "max")
    got = agg[0] == 1
    out = [np.where(got, a, p) for a, p in zip(agg[1:], payload)]
    return out, got


# ------------------------------------------------------------- counting/route
def count_flagged(batch: Batch, recs: Records, mask) -> np.ndarray:
    """Per-block count of flagged records (a reduction over each block)."""
    mask = np.asarray(mask, dtype=bool)
    blk = batch.block_of(recs["rank"])
    batch.machine.advance(cost.scan_steps(batch.length, 1, 1))
    return np.bincount(blk[mask], minlength=batch.n_blocks)


def any_flagged(batch: Batch, mask) -> bool:
    """Whether any block of the batch has a flagged record: a reduction
    across the whole mesh, since the batch's blocks may be spread over it."""
    m = batch.machine
    m.advance(cost.scan_steps(m.n, 1, 1))
    return bool(np.asarray(mask, dtype=bool).any())


def compact_route(batch: Batch, recs: Records, mask, target: Batch, ledger: bool = False) -> Records:
    """Move the flagged records of each block into the matching block of
    ``target`` (its curve-first sub-block), keeping curve order and spreading
    them evenly (at most ``ceil(k / target.length)`` per processor).

    A counting pass runs first; more than ``record_capacity`` per target
    processor raises :class:`CapacityExceeded` instead of dropping data.
    ``ledger`` marks records that are parked in the selection ledger rather
    than in working scratch, so their source-side load is not checked.
    """
    mask = np.asarray(mask, dtype=bool)
    if target.n_blocks != batch.n_blocks or (target.starts != batch.starts).any() or target.length > batch.length:
        raise ValueError("target must be the curve-first sub-block of every source block")
    counts = count_flagged(batch, recs, mask)
    limit = target.cap * target.length
    if (counts > limit).any():
        b = int(np.argmax(counts))
        raise CapacityExceeded(
            f"{int(counts[b])} records routed into a {target.length}-processor block "
            f"holding at most {limit}"
        )
    m = batch.machine
    keep = recs.take(np.flatnonzero(mask))
    # pack flagged records to the front in curve order, then spread them out
    c = _slots_for(batch, recs, check=not ledger)
    blk = batch.block_of(keep["rank"])
    order = np.lexsort((keep["slot"], keep["rank"]))
    out = keep.take(order)
    _place_evenly(out, blk[order], target)
    m.advance(2 * cost.sort_steps(batch.length, c))
    return out


def spread(batch: Batch, recs: Records) -> Records:
    return compact_route(batch, recs, np.ones(len(recs), dtype=bool), batch)


# ------------------------------------------------------------------- lookup
def batched_lookup(batch: Batch, directory: Records, dir_key, dir_payload, queries: Records, query_key):
    """For each query, fetch the payload of the directory record whose key
    equals the query's key. Directory and queries are co-sorted, the
    directory entry heading each run broadcasts to the queries behind it, and
    answers travel back to the queries' home processors.

    Returns ``(payload columns aligned with queries, found)``.
    """
    dk = _as_list([directory[k] for k in ([dir_key] if isinstance(dir_key, str) else dir_key)])
    qk = _as_list(query_key)
    pay_names = [dir_payload] if isinstance(dir_payload, str) else list(dir_payload)
    nd, nq = len(directory), len(queries)
    if nd > 1:
        o = np.lexsort(tuple(dk[::-1] + [batch.block_of(directory["rank"])]))
        b = batch.block_of(directory["rank"])[o]
        same = (b[1:] == b[:-1]) & (lex_cmp([k[o][:-1] for k in dk], [k[o][1:] for k in dk]) == 0)
        if same.any():
            raise ContractError("duplicate directory labels")
    cols = {f"k{i}": np.concatenate([d, q]) for i, (d, q) in enumerate(zip(dk, qk))}
    for j, name in enumerate(pay_names):
        cols[f"p{j}"] = np.concatenate([directory[name], np.zeros(nq, np.int64)])
    co = Records(
        rank=np.concatenate([directory["rank"], queries["rank"]]),
        slot=np.concatenate([directory["slot"], queries["slot"] + batch.machine.config.scratch_records]),
        role=np.concatenate([np.zeros(nd, np.int64), np.ones(nq, np.int64)]),
        tag=np.concatenate([np.arange(nd), np.arange(nq)]),
        **cols,
    )
    keys = [co[f"k{i}"] for i in range(len(dk))]
    co = mesh_sort(batch, co, keys + [co["role"]])
    keys = [co[f"k{i}"] for i in range(len(dk))]
    pay, got = segmented_broadcast(batch, co, keys, co["role"] == 0, [co[f"p{j}"] for j in range(len(pay_names))])
    is_q = co["role"] == 1
    # answers return to their home processors: a sort on home position plus
    # the scan that unpacks them
    c = _slots_for(batch, co)
    batch.machine.advance(cost.sort_steps(batch.length, c) + cost.scan_steps(batch.length, 1, 1))
    out = [np.zeros(nq, np.int64) for _ in pay_names]
    found = np.zeros(nq, dtype=bool)
    t = co["tag"][is_q]
    for o, p in zip(out, pay):
        o[t] = p[is_q]
    found[t] = got[is_q]
    return out, found


__all__ = [
    "NULL_WORD",
    "batched_lookup",
    "compact_route",
    "count_flagged",
    "lex_cmp",
    "mesh_sort",
    "run_heads",
    "segmented_broadcast",
    "segmented_min",
    "segmented_reduce",
    "spread",
]
