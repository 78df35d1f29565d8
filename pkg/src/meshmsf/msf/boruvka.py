"""One Borůvka contraction round on the mesh.

Working records carry ``a <= b`` (current supervertex labels), the weight
``w`` and the originating edge ``(omin, omax, idx)``; ``kind`` is 0 for an
edge and 1 for the self-loop standing for vertex ``a``. Edges compare by
``(w, omin, omax, idx)``, a total order, so every choice is forced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mesh import primitives as P
from ..mesh.records import NULL_WORD, Batch, Records
from .labeling import LabelStats, label_trees

EDGE, LOOP = 0, 1
EDGE_FIELDS = ("rank", "slot", "a", "b", "w", "omin", "omax", "idx", "kind")


def edge_order(E: Records) -> list[np.ndarray]:
    """Total order key of each record; self-loops never win a minimum."""
    loop = E["kind"] == LOOP
    return [np.where(loop, NULL_WORD, E[k]) for k in ("w", "omin", "omax", "idx")]


@dataclass
class CoarsenStats:
    """Per-round counts of unfinished (super)vertices, per block."""

    before: list[int] = field(default_factory=list)
    after: list[int] = field(default_factory=list)
    labels: LabelStats = field(default_factory=LabelStats)


def make_loops(labels, rank, slot) -> Records:
    n = len(labels)
    z = np.zeros(n, np.int64)
    return Records(rank=rank, slot=slot, a=labels, b=labels, w=z, omin=labels, omax=labels,
                   idx=np.full(n, -1, np.int64), kind=np.full(n, LOOP, np.int64))


def ensure_loops(batch: Batch, E: Records) -> Records:
    """Give every endpoint without a self-loop in its block a new one, created
    by the first record of its run (sorted by that endpoint)."""
    for side, bump in (("a", 64), ("b", 128)):
        E = P.mesh_sort(batch, E, [E[side], -E["kind"]])
        agg, head = P.segmented_reduce(batch, E, [E[side]], [E["kind"]], "max")
        need = head & (agg[0] == EDGE)
        if need.any():
            E = Records.concat([E, make_loops(E[side][need], E["rank"][need], E["slot"][need] + bump)])
    return E


def select_min_incident(batch: Batch, E: Records) -> Records:
    """Mark each vertex's lightest incident edge.

    Adds ``sel`` (1 on every edge chosen by either endpoint) and ``live`` (1 on
    self-loops of vertices with at least one incident edge). Needs a self-loop
    for every endpoint.
    """
    E = P.mesh_sort(batch, E, [E["a"]])
    key = edge_order(E)
    cand_a, _ = P.segmented_reduce(batch, E, [E["a"]], key, "min")
    for i, c in enumerate(cand_a):
        E[f"ca{i}"] = c
    E = P.mesh_sort(batch, E, [E["b"]])
    key = edge_order(E)
    cand_b, _ = P.segmented_reduce(batch, E, [E["b"]], key, "min")
    ca = [E[f"ca{i}"] for i in range(4)]
    a_first = P.lex_cmp(ca, cand_b) <= 0
    best = [np.where(a_first, x, y) for x, y in zip(ca, cand_b)]
    loop = E["kind"] == LOOP
    sel_b, _ = P.segmented_broadcast(batch, E, [E["b"]], loop, best)
    hit_b = (P.lex_cmp(sel_b, key) == 0) & ~loop
    for i, s in enumerate(best):
        E[f"sv{i}"] = s
    E["hb"] = hit_b.astype(np.int64)
    E = P.mesh_sort(batch, E, [E["a"]])
    key = edge_order(E)
    loop = E["kind"] == LOOP
    sel_a, _ = P.segmented_broadcast(batch, E, [E["a"]], loop, [E[f"sv{i}"] for i in range(4)])
    hit_a = (P.lex_cmp(sel_a, key) == 0) & ~loop
    E["sel"] = (hit_a | (E["hb"] == 1)).astype(np.int64)
    E["live"] = (loop & (E["sv0"] != NULL_WORD)).astype(np.int64)
    return E.select(*EDGE_FIELDS, "sel", "live")


def prune_finished(batch: Batch, E: Records) -> Records:
    """Drop self-loops of vertices with no incident edge."""
    has = np.zeros(len(E), dtype=bool)
    for side in ("a", "b"):
        E = P.mesh_sort(batch, E, [E[side]])
        has = np.zeros(len(E), dtype=bool) if side == "a" else has
        agg, _ = P.segmented_reduce(batch, E, [E[side]], [E["kind"]], "min")
        if side == "a":
            E["h"] = (agg[0] == EDGE).astype(np.int64)
        else:
            has = (E["h"] == 1) | (agg[0] == EDGE)
    keep = (E["kind"] == EDGE) | has
    return E.take(np.flatnonzero(keep)).select(*EDGE_FIELDS)


def unfinished_counts(batch: Batch, E: Records) -> np.ndarray:
    """Host-side diagnostic: distinct endpoints of edges, per block."""
    e = E["kind"] == EDGE
    blk = batch.block_of(E["rank"][e])
    if not len(blk):
        return np.zeros(batch.n_blocks, np.int64)
    pairs = np.unique(np.stack([np.concatenate([blk, blk]), np.concatenate([E["a"][e], E["b"][e]])]), axis=1)
    return np.bincount(pairs[0], minlength=batch.n_blocks)


def coarsen(batch: Batch, E: Records, selected: list, stats: CoarsenStats | None = None) -> Records:
    """Select, label the selected forest, contract and deduplicate.

    Appends the chosen edges (as ledger records) to ``selected`` and returns
    the contracted working set: one self-loop per surviving supervertex and
    the lightest edge between every adjacent pair.
    """
    m = batch.machine
    with m.phase("coarsen"):
        E = select_min_incident(batch, E)
        live_before = np.bincount(batch.block_of(E["rank"][E["live"] == 1]), minlength=batch.n_blocks)
        E = E.take(np.flatnonzero((E["kind"] == EDGE) | (E["live"] == 1)))
        chosen = E.take(np.flatnonzero(E["sel"] == 1))
        selected.append(chosen.select("rank", "slot", "w", "omin", "omax", "idx"))
        tree = chosen.select("rank", "slot", "a", "b")
    roots = label_trees(batch, tree, stats.labels if stats else None)
    with m.phase("coarsen"):
        ra, fa = P.batched_lookup(batch, roots, "v", ["root"], E, [E["a"]])
        rb, fb = P.batched_lookup(batch, roots, "v", ["root"], E, [E["b"]])
        na = np.where(fa, ra[0], E["a"])
        nb = np.where(fb, rb[0], E["b"])
        E["a"], E["b"] = np.minimum(na, nb), np.maximum(na, nb)
        E = E.take(np.flatnonzero((E["kind"] == LOOP) | (E["a"] != E["b"]))).select(*EDGE_FIELDS)
        E = P.mesh_sort(batch, E, [E["a"], E["b"]] + edge_order(E))
        head = P.run_heads(batch, E, [E["a"], E["b"]])
        E = E.take(np.flatnonzero(head))
    if stats is not None:
        stats.before.extend(int(x) for x in live_before)
        stats.after.extend(int(x) for x in unfinished_counts(batch, E))
    return E
