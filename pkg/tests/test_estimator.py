import numpy as np
import pytest

from meshmsf import Graph, MeshMSF
from meshmsf.oracle import kruskal_msf


def test_fit_attributes():
    g = Graph(5, [(0, 1, 4), (1, 2, 1), (0, 2, 2), (3, 4, 7)])
    est = MeshMSF().fit(g)
    assert est.msf_edges_.tolist() == sorted(kruskal_msf(g)) == [1, 2, 3]
    assert est.labels_.tolist() == [0, 0, 0, 3, 3]
    assert est.n_components_ == 2 and est.weight_ == 10
    assert est.steps_.total_steps > 0


def test_fit_accepts_pairs_and_predicts():
    labels = MeshMSF().fit_predict((3, np.array([[0, 2, 1]])))
    assert labels.tolist() == [0, 1, 0]


def test_params_round_trip():
    est = MeshMSF(rounds=4)
    assert est.get_params()["rounds"] == 4
    assert est.set_params(side=16).side == 16
    assert "rounds=4" in repr(est)
    with pytest.raises(ValueError):
        est.set_params(colour="red")


def test_explicit_side_too_small():
    with pytest.raises(ValueError):
        MeshMSF(side=2).fit(Graph(9, []))
