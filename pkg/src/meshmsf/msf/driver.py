"""Recursive minimal-spanning-forest driver and component labelling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..mesh import primitives as P
from ..mesh.core import MeshConfig, MeshMachine, StepReport
from ..mesh.records import NULL_WORD, Batch, Records
from .boruvka import EDGE, EDGE_FIELDS, LOOP, CoarsenStats, coarsen, ensure_loops, make_loops, prune_finished
from .labeling import label_trees

BASE_LENGTH = 16  # blocks of side <= 4 are finished by plain coarsening
MAX_WORD = 2**60
LEDGER_FIELDS = ("rank", "slot", "w", "omin", "omax", "idx")


@dataclass
class RunStats:
    """Measurements the acceptance checks are made against."""

    coarsen: CoarsenStats = field(default_factory=CoarsenStats)
    # (records at the start of a subproblem, unfinished after R rounds)
    after_rounds: list[tuple[int, int]] = field(default_factory=list)
    # (records routed, destination capacity) for every compact_route
    routes: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class MsfResult:
    msf_origins: set
    component_of: dict
    steps: StepReport
    stats: RunStats = field(default_factory=RunStats)

    @property
    def n_components(self) -> int:
        return len(set(self.component_of.values()))


def side_for(records: int) -> int:
    side = 2
    while side * side < records:
        side *= 2
    return side


def ingest(machine: MeshMachine, n_vertices: int, edges) -> Records:
    """Place one record per undirected edge and one self-loop per vertex in
    curve order, one per processor while they fit."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 3) if len(edges) else np.zeros((0, 3), np.int64)
    u, v, w = edges[:, 0], edges[:, 1], edges[:, 2]
    if (w < 0).any() or (w >= MAX_WORD).any():
        raise ConfigurationError("weights must be integers in [0, 2^60)")
    if len(u) and ((np.minimum(u, v) < 0) | (np.maximum(u, v) >= n_vertices)).any():
        raise ConfigurationError("edge endpoint outside [0, n_vertices)")
    real = u != v
    idx = np.flatnonzero(real)
    lo, hi = np.minimum(u, v)[real], np.maximum(u, v)[real]
    m = len(idx)
    total = m + n_vertices
    n = machine.n
    cap = machine.config.record_capacity
    if total > n * cap:
        raise ConfigurationError(f"{total} records do not fit a {machine.side}x{machine.side} mesh")
    k = np.arange(total)
    per = 1 if total <= n else cap
    rank, slot = k // per, k % per
    E = Records(rank=rank[:m], slot=slot[:m], a=lo, b=hi, w=w[real], omin=lo, omax=hi, idx=idx,
                kind=np.full(m, EDGE, np.int64))
    L = make_loops(np.arange(n_vertices, dtype=np.int64), rank[m:], slot[m:])
    return Records.concat([E, L])


def base_rounds(batch: Batch) -> int:
    """Coarsenings that exhaust any block: each round halves the unfinished
    vertices, of which there are at most two per record slot."""
    return int(math.ceil(math.log2(2 * batch.machine.config.scratch_records * batch.length)))


def _base(batch: Batch, E: Records, selected: list, stats: RunStats) -> None:
    """Small blocks are finished by a fixed number of plain coarsenings."""
    from ..errors import ConsistencyError

    E = ensure_loops(batch, E)
    for _ in range(base_rounds(batch)):
        E = coarsen(batch, E, selected, stats.coarsen)
    if (E["kind"] == EDGE).any():
        raise ConsistencyError("edges survived the base-case coarsenings")


def msf(batch: Batch, E: Records, selected: list, stats: RunStats, rounds: int = 6) -> None:
    """Append the MSF edges of every block's graph to ``selected``.

    ``rounds`` coarsenings shrink the vertex set; each quadrant then finds the
    MSF of its own edges, and only those edges (plus one self-loop per live
    supervertex) are routed to the curve-first sixteenth of the block and
    solved there.
    """
    m = batch.machine
    # a charged whole-mesh OR: subproblems with no edges left are skipped
    with m.phase("route"):
        if not P.any_flagged(batch, E["kind"] == EDGE):
            return
    if batch.length <= BASE_LENGTH:
        _base(batch, E, selected, stats)
        return
    start = np.bincount(batch.block_of(E["rank"]), minlength=batch.n_blocks)
    with m.phase("coarsen"):
        E = ensure_loops(batch, E)
    for _ in range(rounds):
        E = coarsen(batch, E, selected, stats.coarsen)
    with m.phase("coarsen"):
        E = prune_finished(batch, E)
    live = np.bincount(batch.block_of(E["rank"][E["kind"] == LOOP]), minlength=batch.n_blocks)
    stats.after_rounds.extend(zip(start.tolist(), live.tolist()))
    with m.phase("route"):
        E = P.spread(batch, E)

    # every quadrant solves its own edges; those results only filter edges
    quads = batch.quadrants()
    local: list = []
    edges = E.take(np.flatnonzero(E["kind"] == EDGE))
    msf(quads, edges.copy(), local, stats, rounds)
    with m.phase("route"):
        found_ids = Records.concat(local) if local else Records.empty(*LEDGER_FIELDS)
        _, hit = P.batched_lookup(quads, found_ids, "idx", ["idx"], E, [E["idx"]])
        keep = (E["kind"] == LOOP) | (hit & (E["kind"] == EDGE))
        target = batch.first(batch.length // 16)
        stats.routes.append((int(keep.sum()), target.cap * target.length * target.n_blocks))
        routed = P.compact_route(batch, E, keep, target)
    msf(target, routed, selected, stats, rounds)


def connected_components(batch: Batch, n_vertices: int, tree: Records, stats: RunStats | None = None) -> np.ndarray:
    """Component label (smallest vertex) of every vertex, by labelling the
    forest of MSF edges; vertices on no edge label themselves."""
    m = batch.machine
    with m.phase("components"):
        # forest edges come from the selection ledger, so may be bunched up
        tree = P.compact_route(batch, tree, np.ones(len(tree), bool), batch, ledger=True)
    roots = label_trees(batch, tree, stats.coarsen.labels if stats else None, phase="components")
    comp = np.arange(n_vertices, dtype=np.int64)
    comp[roots["v"]] = roots["root"]
    return comp


def run_msf(n_vertices: int, edges, side: int | None = None, rounds: int = 6,
            config: MeshConfig | None = None, faithful: bool = False) -> MsfResult:
    """Ingest a graph, find its MSF and components on a fresh mesh."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 3) if len(edges) else np.zeros((0, 3), np.int64)
    records = int((edges[:, 0] != edges[:, 1]).sum()) + n_vertices
    if config is None:
        config = MeshConfig(side or side_for(max(records, 4)))
    machine = MeshMachine(config, faithful=faithful)
    root = Batch.root(machine)
    E = ingest(machine, n_vertices, edges)
    stats = RunStats()
    selected: list = []
    msf(root, E, selected, stats, rounds)
    chosen = Records.concat(selected) if selected else Records.empty(*LEDGER_FIELDS)
    tree = Records(rank=chosen["rank"], slot=chosen["slot"], a=chosen["omin"], b=chosen["omax"])
    comp = connected_components(root, n_vertices, tree, stats)
    return MsfResult(
        msf_origins=set(chosen["idx"].tolist()),
        component_of=dict(enumerate(comp.tolist())),
        steps=machine.steps.copy(),
        stats=stats,
    )

