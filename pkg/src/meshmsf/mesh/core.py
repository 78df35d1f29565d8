"""Synchronous mesh-connected computer with exact step accounting."""

from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from ..errors import BoundaryError, CapacityExceeded, ConfigurationError
from .hilbert import hilbert_points, hilbert_ranks

DIRECTIONS = ("N", "S", "E", "W")
# offset of the neighbour on each side, as (drow, dcol)
_OFFSET = {"N": (-1, 0), "S": (1, 0), "W": (0, -1), "E": (0, 1)}
_OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}

step_log = logging.getLogger("meshmsf.steps")


def is_power_of_two(x: int) -> bool:
    return x >= 1 and not x & (x - 1)


@dataclass(frozen=True)
class MeshConfig:
    side: int
    word_capacity: int = 64
    record_capacity: int = 2

    def __post_init__(self):
        if not isinstance(self.side, (int, np.integer)) or not is_power_of_two(self.side) or self.side < 2:
            raise ConfigurationError(f"side must be a power of 2 and >= 2, got {self.side!r}")
        if self.record_capacity < 1:
            raise ConfigurationError("record_capacity must be positive")
        # records are RECORD_WORDS wide, plus room for one inbound copy
        from .records import RECORD_WORDS

        if self.word_capacity < 2 * RECORD_WORDS * self.record_capacity:
            raise ConfigurationError(
                f"word_capacity {self.word_capacity} cannot hold {self.record_capacity} "
                f"records of {RECORD_WORDS} words plus scratch"
            )

    @property
    def n(self) -> int:
        return self.side * self.side

    @property
    def scratch_records(self) -> int:
        """Most records a processor may hold transiently inside a primitive."""
        from .records import RECORD_WORDS

        return self.word_capacity // (2 * RECORD_WORDS)


class Rect(NamedTuple):
    row: int
    col: int
    height: int
    width: int


@dataclass(frozen=True)
class SubmeshView:
    """An aligned square sub-grid; ``level`` counts quadrant splits from the root."""

    origin: tuple[int, int]
    side: int
    level: int = 0
    mesh_side: int | None = None

    def __post_init__(self):
        if not is_power_of_two(self.side):
            raise ConfigurationError(f"view side must be a power of 2, got {self.side}")
        ms = self.mesh_side if self.mesh_side is not None else self.side
        r, c = self.origin
        if r < 0 or c < 0 or r + self.side > ms or c + self.side > ms:
            raise ConfigurationError(f"view {self} lies outside the {ms}x{ms} mesh")

    @property
    def rect(self) -> Rect:
        return Rect(self.origin[0], self.origin[1], self.side, self.side)

    @property
    def n(self) -> int:
        return self.side * self.side

    @property
    def start(self) -> int:
        """First curve rank inside the view (views are contiguous rank ranges)."""
        ms = self.mesh_side if self.mesh_side is not None else self.side
        r, c = self.origin
        rows, cols = np.meshgrid(np.arange(r, r + self.side), np.arange(c, c + self.side), indexing="ij")
        return int(hilbert_ranks(rows.ravel(), cols.ravel(), ms).min())

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows and columns of the view's cells in curve order."""
        ms = self.mesh_side if self.mesh_side is not None else self.side
        return hilbert_points(np.arange(self.start, self.start + self.n), ms)


def quadrant(view: SubmeshView, i: int) -> SubmeshView:
    """Sub-square of ``view`` holding curve positions ``[i*n/4, (i+1)*n/4)``."""
    if view.side < 2:
        raise ConfigurationError("a 1x1 view has no quadrants")
    if i not in (0, 1, 2, 3):
        raise ValueError(f"quadrant index must be 0..3, got {i}")
    ms = view.mesh_side if view.mesh_side is not None else view.side
    q = view.n // 4
    rows, cols = hilbert_points(np.arange(view.start + i * q, view.start + (i + 1) * q), ms)
    return SubmeshView((int(rows.min()), int(cols.min())), view.side // 2, view.level + 1, ms)


@dataclass
class StepReport:
    total_steps: int = 0
    per_phase: dict[str, int] = field(default_factory=dict)

    def charge(self, steps: int, phase: str) -> None:
        if steps < 0:
            raise ValueError("negative step charge")
        if steps:
            self.total_steps += steps
            self.per_phase[phase] = self.per_phase.get(phase, 0) + steps

    def merge(self, other: "StepReport") -> None:
        for phase, steps in other.per_phase.items():
            self.charge(steps, phase)

    def copy(self) -> "StepReport":
        return StepReport(self.total_steps, dict(self.per_phase))


class _Concurrent:
    """Runs logically parallel branches; the parent is charged the slowest one."""

    def __init__(self, machine: "MeshMachine"):
        self.machine = machine
        self.branches: list[StepReport] = []

    @contextlib.contextmanager
    def branch(self):
        saved = self.machine.steps
        self.machine.steps = StepReport()
        try:
            yield
        finally:
            self.branches.append(self.machine.steps)
            self.machine.steps = saved


Rule = Callable[..., object]


class MeshMachine:
    """A ``side x side`` grid of processors, each with ``word_capacity`` registers.

    ``sync_step`` is the only operation that moves words between processors.
    Primitives that run a fixed, data-oblivious schedule may instead call
    :meth:`advance` with the exact length of that schedule after computing its
    outcome directly; every such primitive has a step-by-step twin in
    :mod:`meshmsf.mesh.faithful` and the test-suite checks the two agree.
    """

    def __init__(self, config: MeshConfig, strategy: str = "vector", faithful: bool = False):
        self.config = config
        self.side = config.side
        self.registers = np.zeros((self.side, self.side, config.word_capacity), dtype=np.int64)
        self.counts = np.zeros((self.side, self.side), dtype=np.int64)
        self.steps = StepReport()
        self.strategy = strategy
        self.faithful = faithful
        self.sync_steps = 0
        self._phases: list[str] = []
        self.rng_order = np.random.default_rng(0)

    # ------------------------------------------------------------------ views
    @property
    def root(self) -> SubmeshView:
        return SubmeshView((0, 0), self.side, 0, self.side)

    @property
    def n(self) -> int:
        return self.config.n

    # ------------------------------------------------------------- accounting
    @property
    def phase_name(self) -> str:
        return self._phases[-1] if self._phases else "other"

    @contextlib.contextmanager
    def phase(self, name: str):
        self._phases.append(name)
        try:
            yield
        finally:
            self._phases.pop()

    def advance(self, steps: int) -> None:
        """Charge ``steps`` synchronous steps executed by an oblivious schedule."""
        self.steps.charge(int(steps), self.phase_name)
        if steps and step_log.isEnabledFor(logging.DEBUG):
            step_log.debug("%s +%d -> %d", self.phase_name, steps, self.steps.total_steps)

    @contextlib.contextmanager
    def concurrent(self):
        par = _Concurrent(self)
        yield par
        if par.branches:
            slowest = max(par.branches, key=lambda r: r.total_steps)
            self.steps.merge(slowest)

    # ------------------------------------------------------------- stepping
    def sync_step(self, view, emit: Rule, absorb: Rule) -> None:
        """One synchronous step over ``view`` (a SubmeshView or Rect).

        ``emit(regs, counts)`` returns ``{direction: (mask, words)}`` with one
        optional word per outgoing link. ``absorb(regs, counts, inbound)`` sees
        ``inbound[d]`` = the word sent by the neighbour on side ``d`` and returns
        the new ``(regs, counts)``. Both see only the pre-step state.
        """
        rect = view.rect if isinstance(view, SubmeshView) else Rect(*view)
        r0, c0, h, w = rect
        regs = self.registers[r0:r0 + h, c0:c0 + w]
        counts = self.counts[r0:r0 + h, c0:c0 + w]
        if self.strategy == "vector":
            out = emit(regs, counts)
        else:
            out = self._scalar_emit(emit, regs, counts)
        inbound = {}
        for d in DIRECTIONS:
            mask, words = out.get(d, (None, None))
            if mask is None:
                continue
            mask = np.asarray(mask, dtype=bool)
            words = np.broadcast_to(np.asarray(words, dtype=np.int64), mask.shape)
            dr, dc = _OFFSET[d]
            edge = {"N": mask[0, :], "S": mask[-1, :], "W": mask[:, 0], "E": mask[:, -1]}[d]
            if edge.any():
                raise BoundaryError(f"send {d} across the boundary of view {rect}")
            # the receiver sees it as coming from the opposite side
            in_mask = np.zeros_like(mask)
            in_words = np.zeros(mask.shape, dtype=np.int64)
            src = (slice(max(0, -dr), h - max(0, dr)), slice(max(0, -dc), w - max(0, dc)))
            dst = (slice(max(0, dr), h - max(0, -dr)), slice(max(0, dc), w - max(0, -dc)))
            in_mask[dst] = mask[src]
            in_words[dst] = words[src]
            inbound[_OPPOSITE[d]] = (in_mask, in_words)
        if self.strategy == "vector":
            new_regs, new_counts = absorb(regs.copy(), counts.copy(), inbound)
        else:
            new_regs, new_counts = self._scalar_absorb(absorb, regs, counts, inbound)
        new_counts = np.asarray(new_counts)
        if (new_counts > self.config.word_capacity).any() or (new_counts < 0).any():
            raise CapacityExceeded(
                f"register count {int(new_counts.max())} exceeds word capacity {self.config.word_capacity}"
            )
        self.registers[r0:r0 + h, c0:c0 + w] = new_regs
        self.counts[r0:r0 + h, c0:c0 + w] = new_counts
        self.sync_steps += 1
        self.steps.charge(1, self.phase_name)
        if step_log.isEnabledFor(logging.DEBUG):
            step_log.debug("%s sync step %d", self.phase_name, self.sync_steps)

    def _cells(self, h, w):
        cells = [(i, j) for i in range(h) for j in range(w)]
        order = self.rng_order.permutation(len(cells)) if self.strategy == "shuffled" else range(len(cells))
        return [cells[k] for k in order]

    def _scalar_emit(self, emit, regs, counts):
        h, w = counts.shape
        out: dict = {}
        for i, j in self._cells(h, w):
            part = emit(regs[i:i + 1, j:j + 1], counts[i:i + 1, j:j + 1])
            for d, (m, x) in part.items():
                if m is None:
                    continue
                mask, words = out.setdefault(d, (np.zeros((h, w), bool), np.zeros((h, w), np.int64)))
                mask[i, j] = np.asarray(m).reshape(-1)[0] if np.ndim(m) else m
                words[i, j] = np.asarray(x).reshape(-1)[0] if np.ndim(x) else x
        return out

    def _scalar_absorb(self, absorb, regs, counts, inbound):
        h, w = counts.shape
        new_regs = regs.copy()
        new_counts = counts.copy()
        for i, j in self._cells(h, w):
            local_in = {d: (m[i:i + 1, j:j + 1], x[i:i + 1, j:j + 1]) for d, (m, x) in inbound.items()}
            r, c = absorb(regs[i:i + 1, j:j + 1].copy(), counts[i:i + 1, j:j + 1].copy(), local_in)
            new_regs[i, j] = r[0, 0]
            new_counts[i, j] = np.asarray(c).reshape(-1)[0]
        return new_regs, new_counts

    # ----------------------------------------------------------------- debug
    def dump(self, view=None) -> str:
        """One line per processor: ``row col: word,word,...``."""
        rect = (view.rect if isinstance(view, SubmeshView) else Rect(*view)) if view is not None else Rect(0, 0, self.side, self.side)
        lines = []
        for i in range(rect.row, rect.row + rect.height):
            for j in range(rect.col, rect.col + rect.width):
                k = int(self.counts[i, j])
                words = ",".join(str(int(x)) for x in self.registers[i, j, :k])
                lines.append(f"{i} {j}: {words}")
        return "\n".join(lines)


def create_mesh(config: MeshConfig, **kwargs) -> MeshMachine:
    return MeshMachine(config, **kwargs)
