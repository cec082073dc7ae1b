import json
import math
import random

import pytest

from uavnav.gridworld import ACTIONS, Action, GridSpec
from uavnav.qcore import (
    FORMAT_VERSION,
    CheckpointError,
    EpsilonSchedule,
    Hyper,
    QTable,
    load,
    q_update,
    save,
    select_action,
)

GRID = GridSpec()


def make_table(kind="adaptive", goal_conditioned=False, **kw):
    return QTable(
        kind=kind,
        grid=GRID,
        hyper=Hyper(),
        seed=0,
        goal_conditioned=goal_conditioned,
        **kw,
    )


def test_hyper_validation():
    Hyper(alpha=1.0, gamma=0.0)
    with pytest.raises(ValueError):
        Hyper(alpha=0.0)
    with pytest.raises(ValueError):
        Hyper(alpha=1.5)
    with pytest.raises(ValueError):
        Hyper(gamma=1.0)


def test_q_update_worked_value():
    t = make_table()
    s, s2 = (0, 0, 0), (1, 0, 0)
    # alpha=1, gamma=0 writes the reward verbatim: seed next-state max = 4
    q_update(t, s2, Action.PLUS_X, 4.0, (2, 0, 0), Hyper(alpha=1.0, gamma=0.0))
    q_update(t, s2, Action.PLUS_Y, 1.0, (2, 0, 0), Hyper(alpha=1.0, gamma=0.0))
    assert t.max_value(s2) == 4.0
    v = q_update(t, s, Action.PLUS_X, 10.0, s2, Hyper(alpha=0.8, gamma=0.5))
    assert abs(v - 9.6) < 1e-12
    assert t.get(s, Action.PLUS_X) == v


def test_q_update_fixed_point_zero():
    t = make_table()
    v = q_update(t, (0, 0, 0), Action.PLUS_X, 0.0, (1, 0, 0), Hyper())
    assert v == 0.0
    assert t.n_states() == 0  # nothing worth storing


def test_q_update_alpha1_gamma0_collapses_to_reward():
    t = make_table()
    s = (4, 4, 0)
    q_update(t, s, Action.MINUS_Z, -3.0, (4, 4, 1), Hyper())
    v = q_update(t, s, Action.MINUS_Z, 7.0, (4, 4, 1), Hyper(alpha=1.0, gamma=0.0))
    assert v == 7.0


def test_q_update_rejects_nonfinite_reward():
    t = make_table()
    with pytest.raises(ValueError):
        q_update(t, (0, 0, 0), Action.PLUS_X, math.inf, (1, 0, 0), Hyper())


def test_q_update_locality():
    rng = random.Random(1)
    t = make_table()
    for _ in range(200):
        s = (rng.randrange(20), rng.randrange(20), rng.randrange(5))
        q_update(t, s, ACTIONS[rng.randrange(6)], rng.uniform(-5, 5), s, Hyper())
    before = {(s, a): v for s, a, v in t.entries()}
    target_s, target_a = (1, 2, 3), Action.PLUS_Y
    q_update(t, target_s, target_a, 2.5, (9, 9, 4), Hyper())
    after = {(s, a): v for s, a, v in t.entries()}
    for key, v in before.items():
        if key != (target_s, target_a):
            assert after[key] == v
    changed = set(after) - set(before) | {
        k for k in before if before[k] != after.get(k)
    }
    assert changed <= {(target_s, target_a)}


def test_q_update_contraction_to_target():
    t = make_table()
    s, s2 = (0, 0, 0), (1, 1, 1)
    h = Hyper(alpha=0.8, gamma=0.5)
    q_update(t, s2, Action.PLUS_X, 4.0, (2, 2, 2), Hyper(alpha=1.0, gamma=0.0))
    r = 3.0
    target = r + h.gamma * t.max_value(s2)
    for _ in range(200):
        q_update(t, s, Action.MINUS_Y, r, s2, h)
    assert abs(t.get(s, Action.MINUS_Y) - target) < 1e-6


def test_select_action_pure_exploration_uniform():
    t = make_table()
    rng = random.Random(0)
    counts = {a: 0 for a in ACTIONS}
    n = 10_000
    for _ in range(n):
        counts[select_action(t, (0, 0, 0), 1.0, rng)] += 1
    expected = n / 6
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 20.5  # chi-square df=5 at the 0.001 level


def test_select_action_pure_exploitation():
    t = make_table()
    s = (0, 0, 0)
    q_update(t, s, Action.PLUS_X, 5.0, (1, 0, 0), Hyper(alpha=1.0, gamma=0.0))
    rng = random.Random(0)
    for _ in range(100):
        assert select_action(t, s, 0.0, rng) == Action.PLUS_X


def test_select_action_uniform_tie_break():
    t = make_table()
    s = (2, 2, 2)
    for a in ACTIONS:  # all equal, nonzero
        q_update(t, s, a, 3.0, s, Hyper(alpha=1.0, gamma=0.0))
        t._rows[s][a] = 3.0
    rng = random.Random(123)
    n = 60_000
    counts = {a: 0 for a in ACTIONS}
    for _ in range(n):
        counts[select_action(t, s, 0.0, rng)] += 1
    # binomial p=1/6: five sigma around the mean
    sigma = math.sqrt(n * (1 / 6) * (5 / 6))
    for c in counts.values():
        assert abs(c - n / 6) < 5 * sigma


def test_select_action_restricted_candidates():
    t = make_table()
    s = (0, 0, 0)
    q_update(t, s, Action.PLUS_X, 9.0, s, Hyper(alpha=1.0, gamma=0.0))
    rng = random.Random(0)
    picked = select_action(t, s, 0.0, rng, candidates=(Action.PLUS_Y, Action.MINUS_Y))
    assert picked in (Action.PLUS_Y, Action.MINUS_Y)
    with pytest.raises(ValueError):
        select_action(t, s, 0.0, rng, candidates=())


def test_argmax_shift_invariance():
    rng = random.Random(7)
    for _ in range(50):
        t1, t2 = make_table(), make_table()
        s = (1, 1, 1)
        values = [rng.uniform(-10, 10) for _ in ACTIONS]
        shift = rng.uniform(-100, 100)
        t1._rows[s] = list(values)
        t2._rows[s] = [v + shift for v in values]
        r1 = select_action(t1, s, 0.0, random.Random(99))
        r2 = select_action(t2, s, 0.0, random.Random(99))
        assert r1 == r2


def test_epsilon_schedule():
    sched = EpsilonSchedule(epsilon0=1.0, epsilon_min=0.05, decay=0.99)
    assert sched.at(0) == 1.0
    assert abs(sched.at(300) - 0.05) < 1e-12  # 0.99**300 ~ 0.049 < floor
    const = EpsilonSchedule(epsilon0=0.7, epsilon_min=0.0, decay=1.0)
    assert const.at(10_000) == 0.7
    eps = [sched.at(i) for i in range(0, 500, 25)]
    assert all(a >= b for a, b in zip(eps, eps[1:]))
    with pytest.raises(ValueError):
        EpsilonSchedule(epsilon0=0.0)
    with pytest.raises(ValueError):
        EpsilonSchedule(epsilon_min=2.0)
    with pytest.raises(ValueError):
        sched.at(-1)


def _random_table(rng, kind="strategic", n_states=60):
    t = make_table(kind=kind, goal_conditioned=(kind == "strategic"))
    for _ in range(n_states):
        pos = (rng.randrange(20), rng.randrange(20), rng.randrange(5))
        if kind == "strategic":
            dest = (rng.randrange(20), rng.randrange(20), rng.randrange(5))
            key = (pos, dest)
        else:
            key = pos
        t._rows[key] = [rng.uniform(-100, 100) for _ in ACTIONS]
    return t


def test_save_load_round_trip(tmp_path):
    rng = random.Random(11)
    for kind in ("strategic", "adaptive"):
        t = _random_table(rng, kind=kind)
        path = tmp_path / f"{kind}.json"
        save(t, path)
        back = load(path)
        assert back == t
        assert back.kind == t.kind
        assert back.grid == t.grid
        assert back.hyper == t.hyper
        assert back.goal_conditioned == t.goal_conditioned


def test_save_load_thousand_entries(tmp_path):
    rng = random.Random(3)
    t = _random_table(rng, kind="adaptive", n_states=200)
    n_entries = sum(1 for _ in t.entries())
    assert n_entries >= 1000
    save(t, tmp_path / "t.json")
    back = load(tmp_path / "t.json")
    assert dict(((s, a), v) for s, a, v in back.entries()) == dict(
        ((s, a), v) for s, a, v in t.entries()
    )


def test_empty_table_round_trip(tmp_path):
    t = make_table(kind="adaptive", f_mhz=1800.0)
    save(t, tmp_path / "empty.json")
    back = load(tmp_path / "empty.json")
    assert back.n_states() == 0
    assert back.f_mhz == 1800.0
    assert back == t


def test_load_rejects_newer_version(tmp_path):
    t = make_table()
    path = tmp_path / "t.json"
    save(t, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = FORMAT_VERSION + 1
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError):
        load(path)


def test_load_rejects_corrupt_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{ not json")
    with pytest.raises(CheckpointError):
        load(path)
    path.write_text('{"format_version": 1}')
    with pytest.raises(CheckpointError):
        load(path)


def test_lookup_default_zero():
    t = make_table()
    assert t.get((9, 9, 4), Action.PLUS_X) == 0.0
    assert t.values((9, 9, 4)) == (0.0,) * 6
    assert t.max_value((9, 9, 4)) == 0.0
