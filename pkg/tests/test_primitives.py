import numpy as np
import pytest

from meshmsf.errors import CapacityExceeded, ContractError
from meshmsf.mesh import Records
from meshmsf.mesh import cost
from meshmsf.mesh import primitives as P

from conftest import make_batch, random_records


def curve(recs):
    return recs.take(recs.curve_order())


def oracle_sort(batch, recs, names):
    """Per block, records ordered by the named keys then by original curve position."""
    blk = batch.block_of(recs["rank"])
    order = sorted(range(len(recs)), key=lambda i: (blk[i], *(recs[k][i] for k in names), recs["rank"][i], recs["slot"][i]))
    return order


@pytest.mark.parametrize("side,blocks,n", [(4, 1, 20), (8, 4, 90), (8, 2, 60), (16, 16, 300), (8, 1, 3)])
def test_mesh_sort_matches_oracle(side, blocks, n, rng):
    batch = make_batch(side, blocks)
    recs = random_records(batch, n, rng, a=4, b=3)
    recs["tag"] = np.arange(n)
    out = P.mesh_sort(batch, recs, [recs["a"], recs["b"]])
    got = curve(out)["tag"].tolist()
    assert got == oracle_sort(batch, recs, ["a", "b"])
    # every block keeps its own records, spread at most ceil(K / L) per processor
    before = np.bincount(batch.block_of(recs["rank"]), minlength=blocks)
    after = np.bincount(batch.block_of(out["rank"]), minlength=blocks)
    assert (before == after).all()
    per = np.bincount(out["rank"])
    assert per.max() <= max(1, -(-before.max() // batch.length))


def test_mesh_sort_step_charge():
    batch = make_batch(8)
    recs = Records(rank=np.arange(64), slot=np.zeros(64, np.int64), k=np.arange(64)[::-1])
    P.mesh_sort(batch, recs, [recs["k"]])
    # 8x8 block: 4 row phases and 3 column phases of 8 rounds, 2 records of
    # 8 words per round, twice; plus a one-word count over 3 levels
    rounds = 4 * 8 + 3 * 8
    count = 4 * 2 + 4 * 6 + 4 * 14
    assert batch.machine.steps.total_steps == 2 * 2 * 8 * rounds + count


def test_cost_tables():
    assert cost.block_dims(32) == (4, 8)
    assert cost.shearsort_phases(4) == (3, 2)
    assert cost.shearsort_rounds(1) == 0
    assert cost.shearsort_rounds(2) == 2
    assert [lvl[:2] for lvl in cost.scan_levels(32)] == [(4, 4), (16, 4), (32, 2)]
    assert cost.summary_words(2, 1) == 8


def test_overfull_processor_is_rejected():
    batch = make_batch(4)
    n = 5
    recs = Records(rank=np.zeros(n, np.int64), slot=np.arange(n), k=np.arange(n))
    with pytest.raises(CapacityExceeded):
        P.mesh_sort(batch, recs, [recs["k"]])


def runs_oracle(batch, recs, key, val, op):
    order = recs.curve_order()
    blk = batch.block_of(recs["rank"])
    agg, head = {}, {}
    prev = None
    groups = {}
    for i in order:
        g = (blk[i], recs[key][i])
        head[i] = g != prev
        prev = g
        groups.setdefault(g, []).append(recs[val][i])
    f = min if op == "min" else max
    for i in order:
        agg[i] = f(groups[(blk[i], recs[key][i])])
    return [agg[i] for i in range(len(recs))], [head[i] for i in range(len(recs))]


@pytest.mark.parametrize("op", ["min", "max"])
@pytest.mark.parametrize("blocks", [1, 4])
def test_segmented_reduce_matches_groupby(op, blocks, rng):
    batch = make_batch(8, blocks)
    recs = random_records(batch, 80, rng, k=5, v=1000)
    recs = P.mesh_sort(batch, recs, [recs["k"]])
    (agg,), head = P.segmented_reduce(batch, recs, [recs["k"]], [recs["v"]], op)
    want_agg, want_head = runs_oracle(batch, recs, "k", "v", op)
    assert agg.tolist() == want_agg and head.tolist() == want_head


def test_segmented_reduce_needs_sorted_input():
    batch = make_batch(4)
    recs = Records(rank=np.arange(3), slot=np.zeros(3, np.int64), k=[2, 1, 2])
    with pytest.raises(ContractError):
        P.segmented_reduce(batch, recs, [recs["k"]], [recs["k"]])


def test_segmented_min_flags_unique_minimum():
    batch = make_batch(4)
    recs = Records(rank=np.arange(6), slot=np.zeros(6, np.int64), k=[0, 0, 0, 1, 1, 2], w=[5, 3, 3, 9, 1, 4], i=[0, 1, 2, 3, 4, 5])
    assert P.segmented_min(batch, recs, [recs["k"]], [recs["w"], recs["i"]]).tolist() == [0, 1, 0, 0, 1, 1]
    with pytest.raises(ContractError):
        P.segmented_min(batch, recs, [recs["k"]], [recs["w"]])


def test_segmented_broadcast():
    batch = make_batch(4)
    recs = Records(rank=np.arange(6), slot=np.zeros(6, np.int64), k=[0, 0, 0, 1, 1, 2], p=[10, 11, 12, 13, 14, 15])
    src = np.array([0, 1, 0, 0, 0, 1], bool)
    (pay,), got = P.segmented_broadcast(batch, recs, [recs["k"]], src, [recs["p"]])
    assert pay.tolist() == [11, 11, 11, 13, 14, 15]
    assert got.tolist() == [1, 1, 1, 0, 0, 1]
    with pytest.raises(ContractError):
        P.segmented_broadcast(batch, recs, [recs["k"]], np.ones(6, bool), [recs["p"]])


def test_compact_route_keeps_order_and_spreads(rng):
    batch = make_batch(8, 1)
    recs = random_records(batch, 100, rng, v=50)
    recs["tag"] = np.arange(100)
    mask = recs["v"] < 12
    target = batch.first(16)
    out = P.compact_route(batch, recs, mask, target)
    want = [t for t in curve(recs)["tag"].tolist() if mask[t]]
    assert curve(out)["tag"].tolist() == want
    assert out["rank"].max() < 16
    assert np.bincount(out["rank"]).max() <= -(-len(want) // 16)


def test_compact_route_counting_pass_refuses_overflow():
    batch = make_batch(8)
    recs = Records(rank=np.arange(64), slot=np.zeros(64, np.int64))
    with pytest.raises(CapacityExceeded):
        P.compact_route(batch, recs, np.ones(64, bool), batch.first(16))


def test_count_and_any_flagged(rng):
    batch = make_batch(8, 4)
    recs = random_records(batch, 40, rng, v=2)
    counts = P.count_flagged(batch, recs, recs["v"] == 1)
    blk = batch.block_of(recs["rank"])
    assert counts.tolist() == [int(((blk == b) & (recs["v"] == 1)).sum()) for b in range(4)]
    assert P.any_flagged(batch, recs["v"] == 1) == bool((recs["v"] == 1).any())
    assert not P.any_flagged(batch, np.zeros(len(recs), bool))


def test_batched_lookup(rng):
    batch = make_batch(8, 2)
    d = Records(rank=[0, 1, 2, 40], slot=[0, 0, 0, 0], key=[5, 7, 9, 5], val=[50, 70, 90, 55])
    q = Records(rank=[3, 4, 33, 34], slot=[0, 0, 0, 0], want=[7, 8, 5, 7])
    (pay,), found = P.batched_lookup(batch, d, "key", ["val"], q, [q["want"]])
    assert found.tolist() == [True, False, True, False]
    assert pay[found].tolist() == [70, 55]
    dup = Records(rank=[0, 1], slot=[0, 0], key=[5, 5], val=[1, 2])
    with pytest.raises(ContractError):
        P.batched_lookup(batch, dup, "key", ["val"], q, [q["want"]])
