"""Estimator-style front end: configure, ``fit`` a graph, read fitted attributes."""

from __future__ import annotations

import inspect

import numpy as np

from .mesh.core import MeshConfig
from .msf import run_msf
from .msf.driver import side_for
from .oracle import Graph


class MeshMSF:
    """Minimum spanning forest and connected components on a simulated mesh.

    Parameters mirror :class:`MeshConfig` plus the number of coarsenings
    before each recursion. ``fit`` takes a :class:`Graph` or a
    ``(n_vertices, edges)`` pair with edges as ``(u, v, w)`` rows.

    Fitted attributes
    -----------------
    msf_edges_ : sorted array of input indices of the forest's edges
    labels_ : component label (smallest vertex) of every vertex
    n_components_ : number of components
    weight_ : total weight of the forest
    steps_ : step report of the run (total and per phase)
    stats_ : halving and routing measurements of the run
    """

    def __init__(self, side=None, rounds=6, word_capacity=64, record_capacity=2, faithful=False):
        self.side = side
        self.rounds = rounds
        self.word_capacity = word_capacity
        self.record_capacity = record_capacity
        self.faithful = faithful

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep=True):
        return {k: getattr(self, k) for k in self._param_names()}

    def set_params(self, **params):
        valid = self._param_names()
        for k, v in params.items():
            if k not in valid:
                raise ValueError(f"invalid parameter {k!r} for {type(self).__name__}")
            setattr(self, k, v)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    @staticmethod
    def _as_graph(X) -> Graph:
        if isinstance(X, Graph):
            return X
        n, edges = X
        edges = [tuple(int(x) for x in e) for e in np.asarray(edges, dtype=np.int64).reshape(-1, 3)]
        return Graph(int(n), edges)

    def fit(self, X, y=None):
        g = self._as_graph(X)
        arr = g.as_array()
        records = g.n_vertices + (int((arr[:, 0] != arr[:, 1]).sum()) if len(arr) else 0)
        side = self.side if self.side is not None else side_for(max(records, 4))
        config = MeshConfig(side, self.word_capacity, self.record_capacity)
        res = run_msf(g.n_vertices, arr, config=config, rounds=self.rounds, faithful=self.faithful)
        self.msf_edges_ = np.array(sorted(res.msf_origins), dtype=np.int64)
        self.labels_ = np.array([res.component_of[v] for v in range(g.n_vertices)], dtype=np.int64)
        self.n_components_ = res.n_components
        self.weight_ = int(arr[self.msf_edges_, 2].sum()) if len(self.msf_edges_) else 0
        self.steps_ = res.steps
        self.stats_ = res.stats
        self.result_ = res
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
