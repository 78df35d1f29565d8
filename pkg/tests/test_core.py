import numpy as np
import pytest

from meshmsf.errors import BoundaryError, CapacityExceeded, ConfigurationError
from meshmsf.mesh import MeshConfig, MeshMachine, SubmeshView, create_mesh, quadrant
from meshmsf.mesh.core import StepReport
from meshmsf.mesh.hilbert import hilbert_ranks


def shift_east(regs, counts):
    # a rule sees only its own processor, so word 2 says whether it has an
    # east neighbour; those processors send word 0 east
    return {"E": (regs[..., 2] == 1, regs[..., 0])}


def with_east_flags(m):
    m.registers[..., 2] = 0
    m.registers[:, :-1, 2] = 1


def take_from_west(regs, counts, inbound):
    mask, words = inbound.get("W", (np.zeros(counts.shape, bool), 0))
    regs[..., 1] = np.where(mask, words, regs[..., 1])
    counts = counts + mask
    return regs, counts


def test_config_validation():
    with pytest.raises(ConfigurationError):
        MeshConfig(6)
    with pytest.raises(ConfigurationError):
        MeshConfig(1)
    with pytest.raises(ConfigurationError):
        MeshConfig(4, word_capacity=16, record_capacity=2)
    assert MeshConfig(8).n == 64
    assert MeshConfig(8).scratch_records == 4


def test_sync_step_moves_one_word_per_link():
    m = create_mesh(MeshConfig(4))
    m.registers[..., 0] = np.arange(16).reshape(4, 4)
    with_east_flags(m)
    m.sync_step(m.root, shift_east, take_from_west)
    assert (m.registers[:, 1:, 1] == np.arange(16).reshape(4, 4)[:, :-1]).all()
    assert (m.counts[:, 0] == 0).all() and (m.counts[:, 1:] == 1).all()
    assert m.steps.total_steps == 1 and m.sync_steps == 1


def test_rules_see_pre_step_state():
    m = create_mesh(MeshConfig(4))
    m.registers[..., 0] = 7

    def absorb(regs, counts, inbound):
        regs[..., 0] += 1
        return regs, counts

    def emit(regs, counts):
        assert (regs[..., 0] == 7).all()
        return {}

    m.sync_step(m.root, emit, absorb)
    assert (m.registers[..., 0] == 8).all()


def test_boundary_send_raises():
    m = create_mesh(MeshConfig(4))

    def emit(regs, counts):
        return {"N": (np.ones(counts.shape, bool), 1)}

    with pytest.raises(BoundaryError):
        m.sync_step(m.root, emit, lambda r, c, i: (r, c))
    # a view's edge is a boundary too, even inside the mesh
    view = quadrant(m.root, 2)
    with pytest.raises(BoundaryError):
        m.sync_step(view, emit, lambda r, c, i: (r, c))


def test_word_capacity_enforced():
    m = create_mesh(MeshConfig(2, word_capacity=32))

    def absorb(regs, counts, inbound):
        return regs, counts + 40

    with pytest.raises(CapacityExceeded):
        m.sync_step(m.root, lambda r, c: {}, absorb)


@pytest.mark.parametrize("strategy", ["scalar", "shuffled"])
def test_strategies_agree(strategy, rng):
    start = rng.integers(0, 100, (8, 8, 64))
    out = []
    for s in ("vector", strategy):
        m = MeshMachine(MeshConfig(8), strategy=s)
        m.registers[:] = start
        with_east_flags(m)
        for _ in range(3):
            m.sync_step(m.root, shift_east, take_from_west)
        out.append((m.registers.copy(), m.counts.copy(), m.steps.total_steps))
    assert (out[0][0] == out[1][0]).all() and (out[0][1] == out[1][1]).all()
    assert out[0][2] == out[1][2]


def test_inbound_is_tagged_by_sender_side():
    m = create_mesh(MeshConfig(4))
    m.registers[..., 0] = np.arange(16).reshape(4, 4)
    seen = {}

    def emit(regs, counts):
        mask = np.zeros(counts.shape, bool)
        mask[1, 1] = True
        return {"S": (mask, regs[..., 0])}

    def absorb(regs, counts, inbound):
        seen.update({d: (mk.copy(), w.copy()) for d, (mk, w) in inbound.items()})
        return regs, counts

    m.sync_step(m.root, emit, absorb)
    mask, words = seen["N"]
    assert list(zip(*np.nonzero(mask))) == [(2, 1)] and words[2, 1] == 5


def test_quadrants_tile_the_curve():
    root = SubmeshView((0, 0), 8, 0, 8)
    quads = [quadrant(root, i) for i in range(4)]
    assert [q.start for q in quads] == [0, 16, 32, 48]
    for q in quads:
        rows, cols = q.cells()
        assert (hilbert_ranks(rows, cols, 8) == np.arange(q.start, q.start + 16)).all()
        assert q.level == 1 and q.side == 4
    with pytest.raises(ValueError):
        quadrant(root, 4)


def test_concurrent_charges_the_slowest_branch():
    m = create_mesh(MeshConfig(4))
    with m.phase("route"):
        with m.concurrent() as par:
            for k in (3, 9, 5):
                with par.branch():
                    m.advance(k)
    assert m.steps.total_steps == 9 and m.steps.per_phase == {"route": 9}


def test_phase_accounting_uses_innermost_tag():
    m = create_mesh(MeshConfig(2))
    with m.phase("outer"):
        m.advance(2)
        with m.phase("inner"):
            m.advance(3)
    m.advance(1)
    assert m.steps.per_phase == {"outer": 2, "inner": 3, "other": 1}
    with pytest.raises(ValueError):
        StepReport().charge(-1, "x")


def test_dump_format():
    m = create_mesh(MeshConfig(2))
    m.registers[0, 1, :2] = [4, 5]
    m.counts[0, 1] = 2
    assert m.dump().splitlines() == ["0 0: ", "0 1: 4,5", "1 0: ", "1 1: "]
