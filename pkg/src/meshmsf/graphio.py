"""Edge-list files and seeded graph generators.

File format: a header line ``V M``, then ``M`` lines ``u v w`` (decimal,
whitespace separated). A ``#`` starts a comment that runs to the end of the
line; blank lines are ignored.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

from .oracle import MAX_WEIGHT, Graph

DEFAULT_MAX_WEIGHT = 2**20


class GraphFormatError(ValueError):
    """The edge-list text does not parse."""


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def parse_graph(text: str) -> Graph:
    rows = _lines(text)
    try:
        no, head = next(rows)
    except StopIteration:
        raise GraphFormatError("empty graph file: expected a 'V M' header") from None
    if len(head) != 2:
        raise GraphFormatError(f"line {no}: header must be 'V M', got {' '.join(head)!r}")
    try:
        n, m = (int(x) for x in head)
    except ValueError:
        raise GraphFormatError(f"line {no}: header fields must be integers") from None
    if n < 0 or m < 0:
        raise GraphFormatError(f"line {no}: negative vertex or edge count")
    edges = []
    for no, fields in rows:
        if len(fields) != 3:
            raise GraphFormatError(f"line {no}: expected 'u v w', got {len(fields)} fields")
        try:
            u, v, w = (int(x) for x in fields)
        except ValueError:
            raise GraphFormatError(f"line {no}: fields must be decimal integers") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {no}: endpoint outside [0, {n})")
        if not 0 <= w < MAX_WEIGHT:
            raise GraphFormatError(f"line {no}: weight must lie in [0, 2^60)")
        edges.append((u, v, w))
    if len(edges) != m:
        raise GraphFormatError(f"header promises {m} edges, found {len(edges)}")
    return Graph(n, edges)


def read_graph(path) -> Graph:
    return parse_graph(Path(path).read_text())


def format_graph(g: Graph) -> str:
    buf = io.StringIO()
    buf.write(f"{g.n_vertices} {len(g.edges)}\n")
    for u, v, w in g.edges:
        buf.write(f"{u} {v} {w}\n")
    return buf.getvalue()


def write_graph(g: Graph, path) -> None:
    Path(path).write_text(format_graph(g))


# ---------------------------------------------------------------- generators
def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _graph(n, u, v, w) -> Graph:
    return Graph(int(n), [(int(a), int(b), int(c)) for a, b, c in zip(u, v, w)])


def random_gnm(n_vertices: int, n_edges: int, seed=0, max_weight: int = DEFAULT_MAX_WEIGHT) -> Graph:
    """``n_edges`` endpoints drawn uniformly (multi-edges and self-loops allowed)."""
    if n_vertices < 1 and n_edges:
        raise ValueError("edges need at least one vertex")
    if n_vertices < 0 or n_edges < 0 or max_weight < 1:
        raise ValueError("vertex count, edge count and max weight must be non-negative (weight positive)")
    rng = _rng(seed)
    u = rng.integers(0, max(n_vertices, 1), n_edges)
    v = rng.integers(0, max(n_vertices, 1), n_edges)
    w = rng.integers(0, max_weight, n_edges)
    return _graph(n_vertices, u, v, w)


def grid(k: int, seed=0, max_weight: int = DEFAULT_MAX_WEIGHT) -> Graph:
    """``k x k`` lattice with random weights: ``2 k (k - 1)`` edges."""
    if k < 1:
        raise ValueError("grid side must be positive")
    rng = _rng(seed)
    ids = np.arange(k * k).reshape(k, k)
    u = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    v = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    return _graph(k * k, u, v, rng.integers(0, max_weight, len(u)))


def grid_side(n_vertices: int) -> int:
    k = math.isqrt(n_vertices)
    if k * k != n_vertices:
        raise ValueError(f"a grid needs a square vertex count, got {n_vertices}")
    return k


def random_tree(n_vertices: int, seed=0, max_weight: int = DEFAULT_MAX_WEIGHT) -> Graph:
    """Uniform random recursive tree: vertex i attaches to a random earlier vertex."""
    if n_vertices < 1:
        raise ValueError("a tree needs at least one vertex")
    rng = _rng(seed)
    child = np.arange(1, n_vertices)
    parent = (rng.random(n_vertices - 1) * child).astype(np.int64)
    perm = rng.permutation(n_vertices)
    return _graph(n_vertices, perm[parent], perm[child], rng.integers(0, max_weight, n_vertices - 1))


def disjoint_union(parts) -> Graph:
    """Concatenate graphs, shifting each one's labels past the previous ones."""
    edges, offset = [], 0
    for g in parts:
        edges.extend((u + offset, v + offset, w) for u, v, w in g.edges)
        offset += g.n_vertices
    return Graph(offset, edges)


def random_union(n_parts: int, n_vertices: int, n_edges: int, seed=0, max_weight: int = DEFAULT_MAX_WEIGHT) -> Graph:
    """Disjoint union of ``n_parts`` random G(n, m) graphs, each on its own seed."""
    if n_parts < 1:
        raise ValueError("need at least one part")
    seeds = np.random.SeedSequence(seed).spawn(n_parts)
    return disjoint_union(random_gnm(n_vertices, n_edges, np.random.default_rng(s), max_weight) for s in seeds)


def filling(side: int, seed=0, density: int = 3, max_weight: int = DEFAULT_MAX_WEIGHT) -> Graph:
    """A random graph whose records (edges plus one self-loop per vertex) fill
    a ``side x side`` mesh: ``n / density`` vertices, the rest edges. Input
    self-loops are redrawn so every edge becomes a record."""
    n = side * side
    n_vertices = max(2, n // density)
    n_edges = n - n_vertices
    rng = _rng(seed)
    u = rng.integers(0, n_vertices, n_edges)
    v = rng.integers(0, n_vertices - 1, n_edges)
    v = np.where(v >= u, v + 1, v)
    return _graph(n_vertices, u, v, rng.integers(0, max_weight, n_edges))
