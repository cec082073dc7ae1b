"""Tabular Q-learning machinery shared by both agents.

A Q-table maps (state key, action) to a learned value, defaulting to 0.0
for anything never updated. State keys are position cells for the coverage
agent and (position, destination) pairs for the goal-conditioned planner
(plain position when trained against a single fixed destination).

The update is the standard one-step bootstrap

    Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))

and action selection is epsilon-greedy with uniform random tie-breaking
among maximizers, so the symmetric grid picks up no directional bias.

Checkpoints are versioned JSON documents; see ``save``/``load``.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from .gridworld import ACTIONS, Action, Cell, GridSpec

# Position key (coverage agent / fixed-destination planner) or
# (position, destination) key (goal-conditioned planner).
StateKey = Union[Cell, tuple[Cell, Cell]]

FORMAT_VERSION = 1

N_ACTIONS = len(ACTIONS)
_ZERO_ROW = (0.0,) * N_ACTIONS


class CheckpointError(ValueError):
    """A checkpoint file is unreadable, wrong version, or inconsistent."""


@dataclass(frozen=True)
class Hyper:
    """Learning rate and discount."""

    alpha: float = 0.8
    gamma: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exponentially decaying exploration rate with a floor."""

    epsilon0: float = 1.0
    epsilon_min: float = 0.05
    decay: float = 0.995

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon0 <= 1.0:
            raise ValueError(f"epsilon0 must be in (0, 1], got {self.epsilon0}")
        if not 0.0 <= self.epsilon_min <= self.epsilon0:
            raise ValueError("epsilon_min must be in [0, epsilon0]")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")

    def at(self, episode: int) -> float:
        """Exploration rate for an episode index (non-increasing)."""
        if episode < 0:
            raise ValueError("episode must be >= 0")
        return max(self.epsilon_min, self.epsilon0 * self.decay**episode)


class QTable:
    """Sparse (state, action) -> value store with identifying metadata.

    Rows of six action values are created lazily; absent entries read as
    exactly 0.0. A table is single-writer during training and treated as
    frozen afterwards.
    """

    def __init__(
        self,
        kind: str,
        grid: GridSpec,
        hyper: Hyper,
        seed: int,
        goal_conditioned: bool = False,
        f_mhz: float | None = None,
    ) -> None:
        if kind not in ("strategic", "adaptive"):
            raise ValueError(f"unknown agent kind {kind!r}")
        self.kind = kind
        self.grid = grid
        self.hyper = hyper
        self.seed = seed
        self.goal_conditioned = goal_conditioned
        self.f_mhz = f_mhz
        self._rows: dict[StateKey, list[float]] = {}

    def get(self, s: StateKey, a: Action) -> float:
        row = self._rows.get(s)
        return row[a] if row is not None else 0.0

    def values(self, s: StateKey) -> tuple[float, ...]:
        """All six action values at a state (zeros when unvisited)."""
        row = self._rows.get(s)
        return tuple(row) if row is not None else _ZERO_ROW

    def max_value(self, s: StateKey) -> float:
        row = self._rows.get(s)
        return max(row) if row is not None else 0.0

    def n_states(self) -> int:
        return len(self._rows)

    def entries(self) -> Iterator[tuple[StateKey, Action, float]]:
        """Non-zero entries, in insertion order."""
        for s, row in self._rows.items():
            for a in ACTIONS:
                if row[a] != 0.0:
                    yield s, a, row[a]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.grid == other.grid
            and self.hyper == other.hyper
            and self.seed == other.seed
            and self.goal_conditioned == other.goal_conditioned
            and self.f_mhz == other.f_mhz
            and dict(self._iter_nonzero()) == dict(other._iter_nonzero())
        )

    def _iter_nonzero(self) -> Iterator[tuple[tuple[StateKey, int], float]]:
        for s, a, v in self.entries():
            yield (s, int(a)), v


def q_update(
    table: QTable, s: StateKey, a: Action, r: float, s_next: StateKey, h: Hyper
) -> float:
    """One bootstrapped update of Q(s, a); returns the stored value."""
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    rows = table._rows
    next_row = rows.get(s_next)
    max_next = max(next_row) if next_row is not None else 0.0
    row = rows.get(s)
    q = row[a] if row is not None else 0.0
    # weighted form of the same update; exact when alpha is 1
    new = (1.0 - h.alpha) * q + h.alpha * (r + h.gamma * max_next)
    if row is None:
        if new == 0.0:
            return 0.0
        row = [0.0] * N_ACTIONS
        rows[s] = row
    row[a] = new
    return new


def select_action(
    table: QTable,
    s: StateKey,
    epsilon: float,
    rng: random.Random,
    candidates: Sequence[Action] = ACTIONS,
) -> Action:
    """Epsilon-greedy choice over ``candidates``.

    With probability epsilon the action is uniform over the candidates;
    otherwise the argmax of Q(s, .) restricted to them, ties broken
    uniformly at random.
    """
    if not candidates:
        raise ValueError("candidate action set is empty")
    if epsilon > 0.0 and rng.random() < epsilon:
        return candidates[rng.randrange(len(candidates))]
    row = table._rows.get(s)
    if row is None:
        return candidates[rng.randrange(len(candidates))]
    best = max(row[a] for a in candidates)
    ties = [a for a in candidates if row[a] == best]
    if len(ties) == 1:
        return ties[0]
    return ties[rng.randrange(len(ties))]


def _encode_key(s: StateKey) -> list[int]:
    if len(s) == 2 and isinstance(s[0], tuple):
        (px, py, pz), (dx, dy, dz) = s  # type: ignore[misc]
        return [px, py, pz, dx, dy, dz]
    return list(s)  # type: ignore[arg-type]


def _decode_key(flat: list[int]) -> StateKey:
    if len(flat) == 3:
        return (flat[0], flat[1], flat[2])
    if len(flat) == 6:
        return ((flat[0], flat[1], flat[2]), (flat[3], flat[4], flat[5]))
    raise CheckpointError(f"state key must have 3 or 6 components, got {len(flat)}")


def save(table: QTable, path) -> None:
    """Write a versioned JSON checkpoint with full float precision."""
    entries = sorted(
        ((_encode_key(s), int(a), v) for s, a, v in table.entries()),
        key=lambda e: (e[0], e[1]),
    )
    doc = {
        "format_version": FORMAT_VERSION,
        "agent_kind": table.kind,
        "goal_conditioned": table.goal_conditioned,
        "f_mhz": table.f_mhz,
        "grid": {
            "nx": table.grid.nx,
            "ny": table.grid.ny,
            "nz": table.grid.nz,
            "cell_size_m": table.grid.cell_size_m,
            "cell_height_m": table.grid.cell_height_m,
        },
        "hyper": {"alpha": table.hyper.alpha, "gamma": table.hyper.gamma},
        "seed": table.seed,
        "entries": [
            {"state_key": k, "action": a, "value": v} for k, a, v in entries
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


def load(path) -> QTable:
    """Read a checkpoint written by ``save``; rejects newer format versions."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CheckpointError(f"not a Q-table checkpoint: {path}")
    version = doc["format_version"]
    if version > FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {version}, "
            f"newest supported is {FORMAT_VERSION}"
        )
    try:
        grid = GridSpec(
            nx=doc["grid"]["nx"],
            ny=doc["grid"]["ny"],
            nz=doc["grid"]["nz"],
            cell_size_m=doc["grid"]["cell_size_m"],
            cell_height_m=doc["grid"]["cell_height_m"],
        )
        table = QTable(
            kind=doc["agent_kind"],
            grid=grid,
            hyper=Hyper(alpha=doc["hyper"]["alpha"], gamma=doc["hyper"]["gamma"]),
            seed=doc["seed"],
            goal_conditioned=doc.get("goal_conditioned", False),
            f_mhz=doc.get("f_mhz"),
        )
        for entry in doc["entries"]:
            s = _decode_key(entry["state_key"])
            a = Action(entry["action"])
            v = float(entry["value"])
            if not math.isfinite(v):
                raise CheckpointError(f"non-finite value in checkpoint {path}")
            row = table._rows.get(s)
            if row is None:
                row = [0.0] * N_ACTIONS
                table._rows[s] = row
            row[a] = v
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
    return table
