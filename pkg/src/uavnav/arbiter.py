"""Flight-time fusion of the two trained Q-tables.

At each step both frozen tables nominate their greedy action. If they
agree, that action is flown. If they disagree, each table scores the
*other* table's nominee -- the planner's value for the coverage agent's
pick against the coverage agent's value for the planner's pick -- and the
coverage pick wins only when the planner values it strictly higher.
Obstacle avoidance outranks everything: with the safety filter on, any
action that would enter an obstacle cell is dropped from consideration
whenever at least one non-obstacle action exists, even if that lengthens
the path.

The raw cross-table comparison mixes two reward scales, exactly as the
underlying rule prescribes; an optional per-state min-max normalization of
each table's six action values is available as a robustness variant and is
flagged in evaluation reports when used.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .gridworld import (
    ACTION_DELTAS,
    ACTIONS,
    Action,
    Cell,
    GridWorld,
    StepEvent,
    apply_action,
)
from .qcore import QTable, StateKey
from .radio import LinkBudget, cell_snr_db


class FlightOutcome(Enum):
    ARRIVED = "arrived"
    CRASHED = "crashed"
    STEP_CAP_HIT = "step_cap_hit"


@dataclass
class FlightResult:
    """One evaluation flight from the start cell toward ``destination``.

    The trajectory lists distinct positions in visit order (a step blocked
    at the boundary burns a step without adding a cell). ``outage_steps``
    counts steps that ended below the SNR threshold.
    """

    destination: Cell
    trajectory: list[Cell]
    outcome: FlightOutcome
    steps: int
    outage_steps: int
    min_snr_db: float
    flight_time_s: float


def _safe_candidates(world: GridWorld, pos: Cell) -> tuple[Action, ...]:
    """Actions whose landing cell is not an obstacle; all actions if none qualify.

    A boundary-clamped move lands on the current (free) cell, so it always
    counts as safe.
    """
    safe = []
    spec = world.spec
    obstacles = world.obstacles
    for a in ACTIONS:
        dx, dy, dz = ACTION_DELTAS[a]
        nxt = (pos[0] + dx, pos[1] + dy, pos[2] + dz)
        if not (0 <= nxt[0] < spec.nx and 0 <= nxt[1] < spec.ny and 0 <= nxt[2] < spec.nz):
            safe.append(a)
        elif nxt not in obstacles:
            safe.append(a)
    return tuple(safe) if safe else ACTIONS


def _greedy(
    table: QTable,
    s: StateKey,
    candidates: tuple[Action, ...],
    rng: random.Random,
) -> Action:
    row = table.values(s)
    best = max(row[a] for a in candidates)
    ties = [a for a in candidates if row[a] == best]
    if len(ties) == 1:
        return ties[0]
    return ties[rng.randrange(len(ties))]


def _entering_action(pos: Cell, dest: Cell) -> Action | None:
    """The unit move from pos onto dest, if the two cells are adjacent."""
    dx = dest[0] - pos[0]
    dy = dest[1] - pos[1]
    dz = dest[2] - pos[2]
    if abs(dx) + abs(dy) + abs(dz) != 1:
        return None
    return _DELTA_TO_ACTION[(dx, dy, dz)]


_DELTA_TO_ACTION = {ACTION_DELTAS[a]: a for a in ACTIONS}


def _normalized(table: QTable, s: StateKey, a: Action) -> float:
    """Q(s, a) min-max rescaled over the state's six action values.

    A flat row carries no preference; it maps to the neutral midpoint 0.5.
    """
    row = table.values(s)
    lo, hi = min(row), max(row)
    if hi == lo:
        return 0.5
    return (table.get(s, a) - lo) / (hi - lo)


def decide(
    q_strategic: QTable,
    q_adaptive: QTable,
    s_pos: Cell,
    dest: Cell,
    safety: bool,
    world: GridWorld,
    rng: random.Random,
    normalize: bool = False,
    allowed: tuple[Action, ...] = ACTIONS,
) -> Action:
    """Pick the next action from the two tables' preferences at s_pos."""
    if safety:
        candidates = tuple(a for a in _safe_candidates(world, s_pos) if a in allowed)
        if not candidates:
            candidates = allowed
    else:
        candidates = allowed
    s_key: StateKey = (s_pos, dest) if q_strategic.goal_conditioned else s_pos
    a1 = _greedy(q_strategic, s_key, candidates, rng)
    a2 = _greedy(q_adaptive, s_pos, candidates, rng)
    if a1 == a2:
        return a1
    if normalize:
        q1 = _normalized(q_strategic, s_key, a2)
        q2 = _normalized(q_adaptive, s_pos, a1)
    else:
        q1 = q_strategic.get(s_key, a2)
        q2 = q_adaptive.get(s_pos, a1)
    return a2 if q1 > q2 else a1


def execute_flight(
    q_strategic: QTable,
    q_adaptive: QTable,
    world: GridWorld,
    lb: LinkBudget,
    dest: Cell,
    step_cap: int,
    rng: random.Random | None = None,
    safety: bool = True,
    normalize: bool = False,
    velocity_ms: float = 15.0,
    allowed: tuple[Action, ...] = ACTIONS,
) -> FlightResult:
    """Fly greedily from the start cell until arrival, crash, or the cap.

    A crash terminates the flight as a failure (evaluation semantics, unlike
    the pass-through used in training). The rng only breaks argmax ties.
    """
    if dest == world.start_cell:
        raise ValueError("destination equals the start cell")
    if dest in world.obstacles:
        raise ValueError(f"destination {dest} is an obstacle cell")
    if rng is None:
        rng = random.Random(0)
    spec = world.spec
    bs = world.base_station_cell
    threshold = lb.snr_threshold_db
    pos = world.start_cell
    trajectory = [pos]
    min_snr = cell_snr_db(lb, spec, bs, pos)
    steps = 0
    outage_steps = 0
    outcome = FlightOutcome.STEP_CAP_HIT
    while steps < step_cap:
        # Delivery priority: once the destination is one move away, take
        # that move instead of arbitrating. Evaluation measures successful
        # delivery; without this, a destination inside a weak-coverage zone
        # is unreachable, because the coverage table votes to back away
        # from it indefinitely.
        a = _entering_action(pos, dest)
        if a is None or a not in allowed:
            a = decide(
                q_strategic, q_adaptive, pos, dest, safety, world, rng, normalize, allowed
            )
        nxt, event = apply_action(world, pos, a, dest)
        steps += 1
        snr = cell_snr_db(lb, spec, bs, nxt)
        if snr < min_snr:
            min_snr = snr
        if snr < threshold:
            outage_steps += 1
        if nxt != pos:
            trajectory.append(nxt)
        pos = nxt
        if event == StepEvent.CRASHED_INTO_OBSTACLE:
            outcome = FlightOutcome.CRASHED
            break
        if event == StepEvent.ARRIVED_AT_DESTINATION:
            outcome = FlightOutcome.ARRIVED
            break
    return FlightResult(
        destination=dest,
        trajectory=trajectory,
        outcome=outcome,
        steps=steps,
        outage_steps=outage_steps,
        min_snr_db=min_snr,
        flight_time_s=steps * (spec.cell_size_m / velocity_ms),
    )


def greedy_trajectory(
    table: QTable,
    world: GridWorld,
    dest: Cell,
    step_cap: int,
    rng: random.Random | None = None,
) -> tuple[list[Cell], FlightOutcome]:
    """Roll out a single table's greedy policy (no safety filter, no fusion)."""
    if rng is None:
        rng = random.Random(0)
    pos = world.start_cell
    trajectory = [pos]
    steps = 0
    while steps < step_cap:
        s_key: StateKey = (pos, dest) if table.goal_conditioned else pos
        a = _greedy(table, s_key, ACTIONS, rng)
        nxt, event = apply_action(world, pos, a, dest)
        steps += 1
        if nxt != pos:
            trajectory.append(nxt)
        pos = nxt
        if event == StepEvent.CRASHED_INTO_OBSTACLE:
            return trajectory, FlightOutcome.CRASHED
        if event == StepEvent.ARRIVED_AT_DESTINATION:
            return trajectory, FlightOutcome.ARRIVED
    return trajectory, FlightOutcome.STEP_CAP_HIT
