"""Sequential ground truth: Kruskal under the pinned edge order, union-find
component labels, and a verifier for mesh results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_WEIGHT = 2**60


@dataclass
class Graph:
    n_vertices: int
    edges: list  # (u, v, w); the list position is the edge's input index

    def __post_init__(self):
        for i, (u, v, w) in enumerate(self.edges):
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge {i} = ({u}, {v}) has an invalid vertex index")
            if not (isinstance(w, (int, np.integer)) and 0 <= w < MAX_WEIGHT):
                raise ValueError(f"edge {i} weight {w!r} is not an integer in [0, 2^60)")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.sets = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.sets -= 1
        return True


def edge_key(edges, i):
    u, v, w = edges[i]
    return (w, min(u, v), max(u, v), i)


def kruskal_msf(g: Graph) -> set[int]:
    """Input indices of the unique MSF under (w, min end, max end, index)."""
    uf = UnionFind(g.n_vertices)
    out = set()
    for i in sorted(range(len(g.edges)), key=lambda i: edge_key(g.edges, i)):
        u, v, _ = g.edges[i]
        if u != v and uf.union(u, v):
            out.add(i)
    return out


def cc_labels(g: Graph) -> list[int]:
    """Smallest vertex label of each vertex's component."""
    uf = UnionFind(g.n_vertices)
    for u, v, _ in g.edges:
        uf.union(u, v)
    low: dict[int, int] = {}
    for x in range(g.n_vertices):
        r = uf.find(x)
        low[r] = min(low.get(r, x), x)
    return [low[uf.find(x)] for x in range(g.n_vertices)]


def partition(labels) -> frozenset:
    """Label-renaming-invariant form of a vertex labelling."""
    groups: dict = {}
    items = labels.items() if isinstance(labels, dict) else enumerate(labels)
    for x, lab in items:
        groups.setdefault(lab, []).append(x)
    return frozenset(frozenset(v) for v in groups.values())


@dataclass
class Verdict:
    ok: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify(result, g: Graph) -> Verdict:
    """Compare a mesh result with the oracle; report the first failing check."""
    truth = kruskal_msf(g)
    got = set(result.msf_origins)
    if got != truth:
        extra, missing = sorted(got - truth), sorted(truth - got)
        msg = "msf edge set differs"
        if extra:
            i = extra[0]
            msg += f"; edge {i} {tuple(g.edges[i])} selected but not in the oracle forest"
        if missing:
            j = missing[0]
            msg += f"; oracle edge {j} {tuple(g.edges[j])} missing"
        w_got = sum(g.edges[i][2] for i in got if 0 <= i < len(g.edges))
        w_true = sum(g.edges[i][2] for i in truth)
        msg += f" (weights {w_got} vs {w_true})"
        return Verdict(False, [msg])
    labels = cc_labels(g)
    comp = result.component_of
    if partition(comp) != partition(labels):
        for x in range(g.n_vertices):
            same_true = [y for y in range(g.n_vertices) if labels[y] == labels[x]]
            same_got = [y for y in range(g.n_vertices) if comp[y] == comp[x]]
            if same_true != same_got:
                return Verdict(False, [f"component of vertex {x}: expected {same_true}, got {same_got}"])
    n_comp = len(set(labels))
    if len(got) != g.n_vertices - n_comp:
        return Verdict(False, [f"{len(got)} forest edges but {g.n_vertices} vertices and {n_comp} components"])
    return Verdict(True)


def prim_weight(g: Graph) -> int:
    """Weight of a minimum spanning forest by Prim's algorithm (cross-check)."""
    import heapq

    adj: list[list] = [[] for _ in range(g.n_vertices)]
    for u, v, w in g.edges:
        if u != v:
            adj[u].append((w, v))
            adj[v].append((w, u))
    seen = [False] * g.n_vertices
    total = 0
    for s in range(g.n_vertices):
        if seen[s]:
            continue
        heap = [(0, s)]
        while heap:
            w, x = heapq.heappop(heap)
            if seen[x]:
                continue
            seen[x] = True
            total += w
            for e in adj[x]:
                if not seen[e[1]]:
                    heapq.heappush(heap, e)
    return total
