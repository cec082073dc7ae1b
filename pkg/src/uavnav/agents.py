"""Training loops for the two agents.

The strategic planner learns shortest obstacle-aware paths: every step is
rewarded by whether it strictly reduced the distance to the episode's
destination, with large additive terms for crashing into an obstacle or
arriving. Its Q-table is goal-conditioned -- keys are (position,
destination) pairs -- because each episode draws a fresh destination and a
position-only table cannot represent distance-to-goal preferences for
arbitrary targets. A fixed-destination mode keying on position alone is
kept for literal single-goal replication.

The coverage agent learns where the cellular link holds up: each step is
rewarded by whether the SNR at the landed cell clears the threshold. Its
keys are positions only; the episode's destination merely decides when the
episode ends.

Crashes during training pass through (penalty, episode continues); a step
cap aborts episodes that would otherwise wander unboundedly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable

from .gridworld import (
    ACTIONS,
    ACTIONS_XY,
    Action,
    Cell,
    GridWorld,
    StepEvent,
    apply_action,
    distance_m,
    manhattan_m,
    random_free_cell,
)
from .qcore import QTable, StateKey, q_update, select_action
from .radio import LinkBudget, coverage_map

if TYPE_CHECKING:
    from .config import TrainConfig


@dataclass(frozen=True)
class RewardParams:
    """Step-reward constants.

    Terminal events dominate per-step shaping. The coverage rewards sit a
    decade above the distance shaping on purpose: with gamma = 0.5, chains
    of equal-sized step rewards in both tables would converge to the same
    value and turn the flight-time cross-table comparison into noise.
    Keeping the coverage scale well above the shaping scale (and far below
    the arrival bonus) makes that comparison defer to the planner except
    where coverage is actually in question.
    """

    r_closer: float = 1.0
    r_farther: float = -1.0
    r_crash: float = -100.0
    r_arrive: float = 100.0
    r_covered: float = 10.0
    r_outage: float = -200.0

    def __post_init__(self) -> None:
        if not self.r_crash < self.r_farther < 0.0 < self.r_closer < self.r_arrive:
            raise ValueError(
                "require r_crash < r_farther < 0 < r_closer < r_arrive"
            )
        if not self.r_outage < 0.0 < self.r_covered:
            raise ValueError("require r_outage < 0 < r_covered")


class TerminalCause(Enum):
    ARRIVED = "arrived"
    STEP_CAP_HIT = "step_cap_hit"


@dataclass
class StepRecord:
    state: Cell
    action: Action
    reward: float
    event: StepEvent
    snr_db: float | None = None


@dataclass
class EpisodeLog:
    """Per-episode bookkeeping; step records only when requested."""

    episode: int
    destination: Cell
    total_reward: float
    steps: int
    terminal: TerminalCause
    epsilon: float
    records: list[StepRecord] | None = field(default=None, repr=False)


def reward_strategic(
    dist_before_m: float,
    dist_after_m: float,
    event: StepEvent,
    p: RewardParams,
) -> float:
    """Distance shaping plus additive crash/arrival terms."""
    r = p.r_closer if dist_after_m < dist_before_m else p.r_farther
    if event == StepEvent.CRASHED_INTO_OBSTACLE:
        r += p.r_crash
    elif event == StepEvent.ARRIVED_AT_DESTINATION:
        r += p.r_arrive
    return r


def reward_adaptive(snr_db: float, threshold_db: float, p: RewardParams) -> float:
    """Outage penalty strictly below the threshold, reward otherwise."""
    return p.r_outage if snr_db < threshold_db else p.r_covered


def _distance_fn(cfg: "TrainConfig") -> Callable[[GridWorld, Cell, Cell], float]:
    if cfg.distance_metric == "euclidean":
        return distance_m
    if cfg.distance_metric == "manhattan":
        return manhattan_m
    raise ValueError(f"unknown distance metric {cfg.distance_metric!r}")


def _candidates(cfg: "TrainConfig") -> tuple[Action, ...]:
    return ACTIONS_XY if cfg.altitude_locked else ACTIONS


def draw_free_cell(
    world: GridWorld, rng: random.Random, layer: int | None = None
) -> Cell:
    """Random free cell, restricted to one altitude layer when locked."""
    c = random_free_cell(world, rng)
    if layer is None:
        return c
    while c[2] != layer:
        c = random_free_cell(world, rng)
    return c


def train_strategic(
    world: GridWorld, cfg: "TrainConfig", rng: random.Random
) -> tuple[QTable, list[EpisodeLog]]:
    """Run the path-planning training loop for cfg.episodes_strategic episodes.

    In goal-conditioned mode, episodes alternate between the takeoff cell
    and a uniformly random free cell as the start position. Episodes toward
    the same destination then approach it from many directions, so the
    learned values form one connected basin per destination instead of a
    single thin corridor, and a flight nudged off its trained path can
    re-join a valued route from wherever it ends up. Fixed-destination mode
    keeps every episode at the takeoff cell.
    """
    if cfg.episodes_strategic < 1:
        raise ValueError("episodes_strategic must be >= 1")
    goal_conditioned = cfg.goal_conditioned
    fixed_dest = cfg.fixed_destination
    if not goal_conditioned and fixed_dest is None:
        raise ValueError("fixed-destination mode needs cfg.fixed_destination")
    if fixed_dest is not None:
        if not world.spec.in_bounds(fixed_dest) or fixed_dest in world.obstacles:
            raise ValueError(f"fixed destination {fixed_dest} not a free cell")
        if fixed_dest == world.start_cell:
            raise ValueError("fixed destination equals the start cell")

    table = QTable(
        kind="strategic",
        grid=world.spec,
        hyper=cfg.hyper,
        seed=cfg.seed,
        goal_conditioned=goal_conditioned,
    )
    dist = _distance_fn(cfg)
    candidates = _candidates(cfg)
    cap = cfg.resolved_step_cap()
    hyper = cfg.hyper
    rewards = cfg.rewards
    start = world.start_cell
    layer = start[2] if cfg.altitude_locked else None
    arrived = StepEvent.ARRIVED_AT_DESTINATION
    logs: list[EpisodeLog] = []

    for episode in range(cfg.episodes_strategic):
        epsilon = cfg.schedule.at(episode)
        if fixed_dest is not None:
            pos = start
            dest = fixed_dest
        else:
            pos = start if episode % 2 == 0 else draw_free_cell(world, rng, layer)
            dest = draw_free_cell(world, rng, layer)
            while dest == pos:
                dest = draw_free_cell(world, rng, layer)
        d_prev = dist(world, pos, dest)
        total = 0.0
        steps = 0
        records: list[StepRecord] | None = [] if cfg.record_steps else None
        terminal = TerminalCause.STEP_CAP_HIT
        while steps < cap:
            s_key: StateKey = (pos, dest) if goal_conditioned else pos
            a = select_action(table, s_key, epsilon, rng, candidates)
            nxt, event = apply_action(world, pos, a, dest)
            d_next = dist(world, nxt, dest)
            r = reward_strategic(d_prev, d_next, event, rewards)
            n_key: StateKey = (nxt, dest) if goal_conditioned else nxt
            q_update(table, s_key, a, r, n_key, hyper)
            if records is not None:
                records.append(StepRecord(pos, a, r, event))
            total += r
            steps += 1
            pos = nxt
            d_prev = d_next
            if event == arrived:
                terminal = TerminalCause.ARRIVED
                break
        logs.append(
            EpisodeLog(episode, dest, total, steps, terminal, epsilon, records)
        )
    return table, logs


def train_adaptive(
    world: GridWorld, lb: LinkBudget, cfg: "TrainConfig", rng: random.Random
) -> tuple[QTable, list[EpisodeLog]]:
    """Run the coverage training loop for cfg.episodes_adaptive episodes.

    SNR per cell is looked up from a precomputed coverage map of the band;
    the map applies the same per-cell budget the flight executor uses.

    Episodes alternate between the takeoff cell and a uniformly random free
    cell as the start position. The coverage table is keyed by position
    alone and has to be informative over the whole region, which a random
    walk pinned to one corner never reaches; the takeoff-started half keeps
    the early training signal representative of real departures.
    """
    if cfg.episodes_adaptive < 1:
        raise ValueError("episodes_adaptive must be >= 1")
    table = QTable(
        kind="adaptive",
        grid=world.spec,
        hyper=cfg.hyper,
        seed=cfg.seed,
        f_mhz=lb.f_mhz,
    )
    cmap = coverage_map(lb, world)
    snr = cmap.snr
    threshold = lb.snr_threshold_db
    candidates = _candidates(cfg)
    cap = cfg.resolved_step_cap()
    hyper = cfg.hyper
    rewards = cfg.rewards
    start = world.start_cell
    layer = start[2] if cfg.altitude_locked else None
    arrived = StepEvent.ARRIVED_AT_DESTINATION
    logs: list[EpisodeLog] = []

    schedule = cfg.schedule_adaptive
    for episode in range(cfg.episodes_adaptive):
        epsilon = schedule.at(episode)
        pos = start if episode % 2 == 0 else draw_free_cell(world, rng, layer)
        dest = draw_free_cell(world, rng, layer)
        while dest == pos:
            dest = draw_free_cell(world, rng, layer)
        total = 0.0
        steps = 0
        records: list[StepRecord] | None = [] if cfg.record_steps else None
        terminal = TerminalCause.STEP_CAP_HIT
        while steps < cap:
            a = select_action(table, pos, epsilon, rng, candidates)
            nxt, event = apply_action(world, pos, a, dest)
            snr_next = float(snr[nxt[0], nxt[1], nxt[2]])
            r = reward_adaptive(snr_next, threshold, rewards)
            q_update(table, pos, a, r, nxt, hyper)
            if records is not None:
                records.append(StepRecord(pos, a, r, event, snr_db=snr_next))
            total += r
            steps += 1
            pos = nxt
            if event == arrived:
                terminal = TerminalCause.ARRIVED
                break
        logs.append(
            EpisodeLog(episode, dest, total, steps, terminal, epsilon, records)
        )
    return table, logs
