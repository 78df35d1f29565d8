"""Tree labelling: every vertex of a forest learns the label of a root of its tree.

Vertices point toward their smallest tree neighbour, pointer targets are
resolved block by block up the quadrant hierarchy, lone roots are adopted
by a neighbouring subtree, and the forest of subtrees is labelled
recursively in the curve-first half of the block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mesh import primitives as P
from ..mesh.records import NULL_WORD, Batch, Records


@dataclass
class ContractionMap:
    level: int
    child: np.ndarray
    parent: np.ndarray

    def dump(self) -> str:
        return "\n".join(f"{self.level} {c} {p}" for c, p in zip(self.child.tolist(), self.parent.tolist()))


@dataclass
class LabelStats:
    """Counts the halving checks are made against."""

    live: list[int] = field(default_factory=list)
    subtrees: list[int] = field(default_factory=list)
    maps: list[ContractionMap] = field(default_factory=list)

    def record(self, live, subtrees):
        self.live.extend(int(x) for x in live)
        self.subtrees.extend(int(x) for x in subtrees)


def build_directed_forest(batch: Batch, tree: Records) -> Records:
    """One vertex record per endpoint of ``tree`` (fields ``a < b``).

    Each edge is split into its two half-edges; sorting by ``(u, v)`` puts
    every vertex's smallest neighbour at the head of its run. ``ptr`` is that
    neighbour when smaller than ``v``, else ``v`` itself (a root); ``nbr``
    keeps the smallest neighbour for adoption.
    """
    half = Records(
        rank=np.concatenate([tree["rank"], tree["rank"]]),
        slot=np.concatenate([2 * tree["slot"], 2 * tree["slot"] + 1]),
        u=np.concatenate([tree["a"], tree["b"]]),
        v=np.concatenate([tree["b"], tree["a"]]),
    )
    half = P.mesh_sort(batch, half, [half["u"], half["v"]])
    head = P.run_heads(batch, half, [half["u"]])
    verts = half.take(np.flatnonzero(head))
    v, nbr = verts["u"], verts["v"]
    return Records(rank=verts["rank"], slot=verts["slot"], v=v, nbr=nbr, ptr=np.minimum(v, nbr))


def _has_child(batch: Batch, verts: Records) -> tuple[Records, np.ndarray]:
    """Whether some other vertex points at each vertex (its run under ptr is
    longer than itself). Only meaningful for roots, which sit in run ``ptr``."""
    verts = P.mesh_sort(batch, verts, [verts["ptr"], verts["v"]])
    agg, _ = P.segmented_reduce(batch, verts, [verts["ptr"]], [(verts["v"] != verts["ptr"]).astype(np.int64)], "max")
    return verts, agg[0] == 1


def resolve_greatest_ancestors(batch: Batch, verts: Records) -> Records:
    """Replace every ``ptr`` by the root of the vertex's directed subtree.

    Records are sorted by their own label, so a pointer target (a smaller
    label) sits earlier on the curve. Working up from single processors, at
    each level every block runs three lookup rounds: a vertex whose pointer
    lands on a record inside its block takes that record's pointer.
    """
    verts = P.mesh_sort(batch, verts, [verts["v"]])
    m = batch.machine
    # inside one processor pointers are followed locally (no communication);
    # a chain there has at most as many hops as the processor holds records
    ptr = verts["ptr"].copy()
    for _ in range(max(1, P.per_processor(verts))):
        j = match_pairs(verts["rank"], verts["v"], verts["rank"], ptr)
        ptr = np.where(j >= 0, ptr[np.maximum(j, 0)], ptr)
    verts["ptr"] = ptr
    g = 1
    while g < batch.length:
        g = min(g * 4, batch.length)
        level = batch.split(g)
        for _ in range(3):
            pay, found = P.batched_lookup(level, verts, "v", ["ptr"], verts, [verts["ptr"]])
            verts["ptr"] = np.where(found, pay[0], verts["ptr"])
    return verts


def adopt_singletons(batch: Batch, verts: Records, has_child: np.ndarray) -> Records:
    """A root nobody points at takes the root of its smallest neighbour."""
    lone = (verts["ptr"] == verts["v"]) & ~has_child
    pay, found = P.batched_lookup(batch, verts, "v", ["ptr"], verts, [verts["nbr"]])
    verts["ptr"] = np.where(lone & found, pay[0], verts["ptr"])
    return verts


def label_trees(batch: Batch, tree: Records, stats: LabelStats | None = None, level: int = 0,
                phase: str = "label") -> Records:
    """Label a forest given as undirected edges ``(a < b)``.

    Returns one record per vertex touching an edge, with ``v`` and ``root``;
    all vertices of one tree share a root label (the tree's smallest label).
    Steps are charged to ``phase`` (routing included, unless it is "label").
    """
    if stats is None:
        stats = LabelStats()
    m = batch.machine
    with m.phase(phase):
        verts = build_directed_forest(batch, tree)
        verts, child = _has_child(batch, verts)
        verts["child"] = child.astype(np.int64)
        verts = resolve_greatest_ancestors(batch, verts)
        verts = adopt_singletons(batch, verts, verts["child"] == 1)
        blk = batch.block_of(verts["rank"])
        pairs = np.unique(np.stack([blk, verts["ptr"]]), axis=1)
        stats.record(
            np.bincount(blk, minlength=batch.n_blocks),
            np.bincount(pairs[0], minlength=batch.n_blocks),
        )
        # tree edges joining two different subtrees become edges between roots
        ra, fa = P.batched_lookup(batch, verts, "v", ["ptr"], tree, [tree["a"]])
        rb, fb = P.batched_lookup(batch, verts, "v", ["ptr"], tree, [tree["b"]])
        ra, rb = ra[0], rb[0]
        cross = ra != rb
    if batch.length == 1:
        if cross.any():
            # one processor holds the whole remaining forest: finish locally
            verts["ptr"] = local_roots(batch.block_of(verts["rank"]), verts["v"], verts["ptr"],
                                       batch.block_of(tree["rank"][cross]), ra[cross], rb[cross])
        return Records(rank=verts["rank"], slot=verts["slot"], v=verts["v"], root=verts["ptr"])
    sub = Records(
        rank=tree["rank"],
        slot=tree["slot"],
        a=np.minimum(ra, rb),
        b=np.maximum(ra, rb),
    )
    with m.phase("route" if phase == "label" else phase):
        routed = P.compact_route(batch, sub, cross, batch.first_half())
    inner = label_trees(batch.first_half(), routed, stats, level + 1, phase)
    stats.maps.append(ContractionMap(level, verts["v"].copy(), verts["ptr"].copy()))
    with m.phase(phase):
        pay, found = P.batched_lookup(batch, inner, "v", ["root"], verts, [verts["ptr"]])
        root = np.where(found, pay[0], verts["ptr"])
    return Records(rank=verts["rank"], slot=verts["slot"], v=verts["v"], root=root)


def match_pairs(k1, k2, q1, q2) -> np.ndarray:
    """Index of the record with keys ``(k1, k2)`` equal to each query, or -1."""
    out = np.full(len(q1), -1, dtype=np.int64)
    if not len(k1) or not len(q1):
        return out
    both = np.concatenate([np.stack([k1, k2], 1), np.stack([q1, q2], 1)])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    kid, qid = inv[: len(k1)], inv[len(k1):]
    order = np.argsort(kid, kind="stable")
    s = kid[order]
    pos = np.minimum(np.searchsorted(s, qid), len(s) - 1)
    hit = s[pos] == qid
    out[hit] = order[pos[hit]]
    return out


def local_roots(vblk, v, ptr, eblk, ea, eb) -> np.ndarray:
    """Sequential finish for one-processor blocks: merge subtree roots joined
    by the remaining edges and point every vertex at its group's minimum."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    keys = np.unique(np.concatenate([np.stack([vblk, ptr], 1), np.stack([eblk, ea], 1), np.stack([eblk, eb], 1)]), axis=0)

    def idx(b, x):
        return match_pairs(keys[:, 0], keys[:, 1], b, x)

    ia, ib = idx(eblk, ea), idx(eblk, eb)
    n = len(keys)
    g = coo_matrix((np.ones(len(ia)), (ia, ib)), shape=(n, n))
    _, comp = connected_components(g, directed=False)
    low = np.full(comp.max() + 1, np.iinfo(np.int64).max)
    np.minimum.at(low, comp, keys[:, 1])
    return low[comp[idx(vblk, ptr)]]


def unwind_labels(batch: Batch, maps: list[ContractionMap], homes: Records | None = None) -> dict[int, int]:
    """Compose contraction maps deepest level first; every child label of the
    shallowest map resolves to its final ancestor. Each composition step is a
    batched lookup of the parents against the deeper level's map."""
    from ..errors import ConsistencyError

    if not maps:
        return {}
    maps = sorted(maps, key=lambda mp: mp.level)
    for mp in maps:
        if len(np.unique(mp.child)) != len(mp.child):
            raise ConsistencyError(f"level {mp.level} map is not a function")
    n = batch.machine.n
    deeper = None
    for mp in reversed(maps):
        k = len(mp.child)
        rec = Records(rank=np.arange(k) % n if homes is None else homes["rank"][:k],
                      slot=np.arange(k) // n, v=mp.child, root=mp.parent.copy())
        if deeper is not None and len(deeper):
            pay, found = P.batched_lookup(batch, deeper, "v", ["root"], rec, [rec["root"]])
            rec["root"] = np.where(found, pay[0], rec["root"])
        deeper = rec
    return dict(zip(deeper["v"].tolist(), deeper["root"].tolist()))
