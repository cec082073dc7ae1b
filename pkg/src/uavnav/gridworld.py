"""Deterministic 3D grid environment for UAV navigation training.

The region is an ``nx x ny x nz`` lattice of box cells. A cell is addressed
by integer indices ``(ix, iy, iz)`` and positioned in metres by its center.
Movement is 6-connected (one axis-aligned cell per step, no hover, no
diagonals). Moves off the lattice edge are clamped in place; the world never
produces an out-of-bounds position.

Obstacles occupy whole cells and are placed i.i.d. uniformly at build time,
excluding the start cell and the base-station column. During training an
agent passes *through* obstacle cells (the step is reported as a crash but
the episode continues); evaluation treats a crash as terminal. That split is
handled by the callers -- this module only reports what a step did.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

# A cell address. Plain tuples keep hashing and construction cheap in the
# training hot loop.
Cell = tuple[int, int, int]


@dataclass(frozen=True)
class GridSpec:
    """Lattice dimensions and physical cell size.

    nx, ny, nz: cell counts per axis. cell_size_m is the horizontal edge of
    a cell; cell_height_m the vertical one. Defaults give a 1 km x 1 km
    region capped at 100 m altitude.
    """

    nx: int = 20
    ny: int = 20
    nz: int = 5
    cell_size_m: float = 50.0
    cell_height_m: float = 20.0

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1 or self.nz < 1:
            raise ValueError("grid dimensions must be positive")
        if self.cell_size_m <= 0 or self.cell_height_m <= 0:
            raise ValueError("cell sizes must be positive")

    @property
    def region_side_m(self) -> float:
        return self.nx * self.cell_size_m

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def max_altitude_m(self) -> float:
        return self.nz * self.cell_height_m

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.nx and 0 <= c[1] < self.ny and 0 <= c[2] < self.nz


class Action(IntEnum):
    """The six axis-aligned unit moves."""

    PLUS_X = 0
    MINUS_X = 1
    PLUS_Y = 2
    MINUS_Y = 3
    PLUS_Z = 4
    MINUS_Z = 5


# Unit displacement per action, indexed by Action value.
ACTION_DELTAS: tuple[Cell, ...] = (
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
)

ACTIONS: tuple[Action, ...] = tuple(Action)
# Horizontal-only subset used when flight is locked to one altitude layer.
ACTIONS_XY: tuple[Action, ...] = (
    Action.PLUS_X,
    Action.MINUS_X,
    Action.PLUS_Y,
    Action.MINUS_Y,
)


class StepEvent(IntEnum):
    MOVED = 0
    BLOCKED_AT_BOUNDARY = 1
    CRASHED_INTO_OBSTACLE = 2
    ARRIVED_AT_DESTINATION = 3


class StepOutcome(NamedTuple):
    next: Cell
    event: StepEvent


@dataclass(frozen=True)
class GridWorld:
    """Immutable environment: lattice, obstacle set, start and BS site.

    ``base_station_cell`` fixes the ground-plane (x, y) column of the base
    station; the antenna height lives in the link budget, not here.
    """

    spec: GridSpec
    obstacles: frozenset[Cell]
    base_station_cell: Cell
    start_cell: Cell
    obstacle_density: float

    @property
    def n_free_cells(self) -> int:
        return self.spec.n_cells - len(self.obstacles)


def build(
    spec: GridSpec,
    density: float,
    seed: int,
    start: Cell = (0, 0, 0),
    bs_xy: Cell | None = None,
) -> GridWorld:
    """Build a world with ``round(density * n_cells)`` uniformly placed obstacles.

    The start cell and every cell of the base-station (x, y) column are kept
    free. The same (spec, density, seed, start, bs_xy) always produces the
    same obstacle set.
    """
    if not 0.0 <= density <= 0.5:
        raise ValueError(f"obstacle density must be in [0, 0.5], got {density}")
    if not spec.in_bounds(start):
        raise ValueError(f"start cell {start} out of bounds")
    if bs_xy is None:
        bs_xy = (spec.nx // 2, spec.ny // 2, 0)
    if not spec.in_bounds(bs_xy):
        raise ValueError(f"base-station cell {bs_xy} out of bounds")

    n_obstacles = round(density * spec.n_cells)
    bs_column = {(bs_xy[0], bs_xy[1], z) for z in range(spec.nz)}
    eligible = [
        (x, y, z)
        for x in range(spec.nx)
        for y in range(spec.ny)
        for z in range(spec.nz)
        if (x, y, z) != start and (x, y, z) not in bs_column
    ]
    if n_obstacles > len(eligible):
        raise ValueError(
            f"grid too small: {n_obstacles} obstacles requested, "
            f"{len(eligible)} eligible cells"
        )
    rng = random.Random(seed)
    obstacles = frozenset(rng.sample(eligible, n_obstacles))
    return GridWorld(
        spec=spec,
        obstacles=obstacles,
        base_station_cell=bs_xy,
        start_cell=start,
        obstacle_density=density,
    )


def apply_action(world: GridWorld, at: Cell, action: Action, dest: Cell) -> StepOutcome:
    """Move one cell; report where the agent landed and what that means.

    Out-of-bounds moves leave the position unchanged. Landing on an obstacle
    is reported as a crash but the position advances into the obstacle cell
    (pass-through); landing on ``dest`` is an arrival.
    """
    dx, dy, dz = ACTION_DELTAS[action]
    nxt = (at[0] + dx, at[1] + dy, at[2] + dz)
    spec = world.spec
    if not (0 <= nxt[0] < spec.nx and 0 <= nxt[1] < spec.ny and 0 <= nxt[2] < spec.nz):
        return StepOutcome(at, StepEvent.BLOCKED_AT_BOUNDARY)
    if nxt in world.obstacles:
        return StepOutcome(nxt, StepEvent.CRASHED_INTO_OBSTACLE)
    if nxt == dest:
        return StepOutcome(nxt, StepEvent.ARRIVED_AT_DESTINATION)
    return StepOutcome(nxt, StepEvent.MOVED)


def cell_center_m(spec: GridSpec, c: Cell) -> tuple[float, float, float]:
    """Metric coordinates of a cell center."""
    return (
        (c[0] + 0.5) * spec.cell_size_m,
        (c[1] + 0.5) * spec.cell_size_m,
        (c[2] + 0.5) * spec.cell_height_m,
    )


def distance_m(world: GridWorld, a: Cell, b: Cell) -> float:
    """Euclidean distance between cell centers, in metres."""
    s = world.spec
    dx = (a[0] - b[0]) * s.cell_size_m
    dy = (a[1] - b[1]) * s.cell_size_m
    dz = (a[2] - b[2]) * s.cell_height_m
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def manhattan_m(world: GridWorld, a: Cell, b: Cell) -> float:
    """Axis-summed (taxicab) distance between cell centers, in metres."""
    s = world.spec
    return (
        abs(a[0] - b[0]) * s.cell_size_m
        + abs(a[1] - b[1]) * s.cell_size_m
        + abs(a[2] - b[2]) * s.cell_height_m
    )


def random_free_cell(world: GridWorld, rng: random.Random) -> Cell:
    """Draw a uniformly random non-obstacle cell, never the start cell."""
    n_eligible = world.spec.n_cells - len(world.obstacles)
    if world.start_cell not in world.obstacles:
        n_eligible -= 1
    if n_eligible <= 0:
        raise ValueError("no free cell available besides the start cell")
    spec = world.spec
    while True:
        c = (rng.randrange(spec.nx), rng.randrange(spec.ny), rng.randrange(spec.nz))
        if c != world.start_cell and c not in world.obstacles:
            return c


def default_step_cap(spec: GridSpec) -> int:
    """Training/evaluation safety cap: 4 * (nx + ny + nz) steps."""
    return 4 * (spec.nx + spec.ny + spec.nz)
