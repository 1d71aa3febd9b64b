import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causectl.control import run_closed_loop, simulate_random
from causectl.logic import parse
from causectl.mining import CauseClause, CombinedCause
from causectl.logic import StateAtom
from causectl.plants import (
    Edge,
    GridConfig,
    GridRobot,
    TrafficConfig,
    TrafficNetwork,
    arena_8x7,
    blocks,
    five_link,
    robot_step,
    traffic_flow,
    traffic_step,
)
from causectl.plants.external import (
    DimensionError,
    ExternalPlant,
    MalformedReply,
    ProcessExited,
    ReplyTimeout,
    external_step,
)

SERVE = [sys.executable, "-m", "causectl.plants.serve"]


def script(body):
    return [sys.executable, "-c", body]


# ---------------------------------------------------------------- traffic

CFG = five_link()
CAP = np.array(CFG.capacity)
states = st.tuples(*[st.floats(0, c) for c in CFG.capacity]).map(np.array)
controls = st.tuples(st.sampled_from([0.0, 1.0]), st.sampled_from([0.0, 1.0])).map(np.array)


@settings(max_examples=300)
@given(states, controls, st.integers(0, 2**32 - 1))
def test_traffic_stays_within_capacity(x, u, seed):
    w = TrafficNetwork(CFG).noise(np.random.default_rng(seed))
    nxt = traffic_step(x, u, CFG, w)
    assert (nxt >= 0).all() and (nxt <= CAP).all()


@settings(max_examples=300)
@given(states, controls)
def test_traffic_without_inflow_never_gains_vehicles(x, u):
    assert traffic_step(x, u, CFG, np.zeros(5)).sum() <= x.sum() + 1e-9


@settings(max_examples=300)
@given(states, controls, st.integers(0, 4), st.floats(0, 40))
def test_fuller_downstream_never_speeds_upstream(x, u, link, extra):
    fuller = x.copy()
    fuller[link] = min(CAP[link], x[link] + extra)
    base, more = traffic_flow(x, u, CFG), traffic_flow(fuller, u, CFG)
    for up in range(5):
        if up != link:
            assert more[up] <= base[up] + 1e-12


def test_traffic_signal_gating_by_hand():
    x = np.array([10.0, 0, 0, 10, 0])
    # u0 = 0 gives link 0 green: 10 vehicles leave, 7.5 reach link 1
    assert np.allclose(traffic_step(x, [0, 0], CFG, np.zeros(5)), [0, 7.5, 0, 10, 0])
    # u0 = 1 gives link 3 green: 10 leave, 3 reach link 1
    assert np.allclose(traffic_step(x, [1, 0], CFG, np.zeros(5)), [10, 3, 0, 0, 0])


def test_traffic_blocked_by_full_downstream():
    x = np.array([20.0, 39, 0, 0, 0])
    nxt = traffic_step(x, [0, 1], CFG, np.zeros(5))
    # room of 1 vehicle on link 1 admits 1/0.75 upstream departures
    assert nxt[0] == pytest.approx(20 - 1 / 0.75)
    assert nxt[1] == pytest.approx(40.0)


def test_traffic_config_validation():
    with pytest.raises(ValueError):
        TrafficConfig((10,), (5,), (1,), (Edge(0, 1, 0.5),))
    with pytest.raises(ValueError):
        TrafficConfig((10, 10), (5, 5), (1, 0), (Edge(0, 1, 0.7), Edge(0, 0, 0.7)))
    with pytest.raises(ValueError):
        Edge(0, 1, 1.5)
    with pytest.raises(ValueError):
        traffic_step(np.array([50.0, 0, 0, 0, 0]), [0, 0], CFG, np.zeros(5))


@pytest.mark.parametrize("congested, target", [(False, 0.46), (True, 0.79)])
def test_traffic_baseline_rates(congested, target):
    rates = [
        simulate_random(TrafficNetwork(five_link(congested)), None, 20, 100, seed).violation_rate()
        for seed in range(3)
    ]
    assert abs(np.mean(rates) - target) <= 0.15


def test_traffic_label():
    plant = TrafficNetwork(CFG)
    assert plant.label(np.array([29.9, 0, 0, 14.9, 0]), None) == 0
    assert plant.label(np.array([0, 0, 0, 15, 0]), None) == 1


# ---------------------------------------------------------------- grid

GRID = GridConfig(5, 6)
cells = st.tuples(st.integers(0, 4), st.integers(0, 5))


@settings(max_examples=300)
@given(cells, st.integers(0, 3))
def test_robot_stays_on_grid(cell, move):
    r, c = robot_step(cell, [move], GRID)
    assert 0 <= r < 5 and 0 <= c < 6


@settings(max_examples=300)
@given(st.tuples(st.integers(1, 3), st.integers(1, 4)), st.integers(0, 3))
def test_robot_interior_moves(cell, move):
    nxt = robot_step(cell, [move], GRID)
    assert np.abs(nxt - np.array(cell)).sum() == 1
    back = robot_step(robot_step(cell, [0], GRID), [2], GRID)
    assert tuple(back) == cell


def test_robot_clamps_and_rejects():
    assert tuple(robot_step((0, 0), [0], GRID)) == (0, 0)
    assert tuple(robot_step((0, 0), [3], GRID)) == (0, 0)
    assert tuple(robot_step((4, 5), [1], GRID)) == (4, 5)
    with pytest.raises(ValueError):
        robot_step((0, 0), [7], GRID)


def test_grid_config():
    cfg = arena_8x7()
    assert len(cfg.danger) == 8 + 12
    assert blocks((0, 0, 0, 1)) == {(0, 0), (0, 1)}
    assert (0, 0) not in cfg.initial_cells()
    with pytest.raises(ValueError):
        GridConfig(2, 2, {(5, 5)})
    with pytest.raises(ValueError):
        GridConfig(1, 1, {(0, 0)})
    with pytest.raises(ValueError):
        GridConfig(2, 2, {(0, 0)}, initial=((0, 0),))


def test_grid_without_danger_has_no_violations():
    assert simulate_random(GridRobot(GridConfig(4, 4)), None, 5, 50, 0).violations == 0


def test_grid_is_deterministic():
    plant = GridRobot(arena_8x7())
    a = simulate_random(plant, None, 3, 40, 12)
    assert a == simulate_random(plant, None, 3, 40, 12)


# ---------------------------------------------------------------- external adapter


def test_echo_plant_identity():
    with ExternalPlant(SERVE + ["echo", "3", "1"]) as plant:
        assert (plant.n, plant.m) == (3, 1)
        x = np.array([1.5, -2.0, 0.1])
        assert np.array_equal(external_step(plant, x, [1.0], 5), x)
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert np.array_equal(plant.step(x, [0.0], rng), x)


def test_adapter_matches_native_grid_steps(tmp_path):
    cfg_file = tmp_path / "g.cfg"
    cfg_file.write_text("[grid]\nrows = 8\ncols = 7\ndanger_blocks = [[0, 1, 0, 3], [4, 7, 4, 6]]\n")
    native = arena_8x7()
    with ExternalPlant(SERVE + ["grid", str(cfg_file)]) as plant:
        assert plant.space == GridRobot(native).space
        for r in range(8):
            for c in range(7):
                for move in range(4):
                    assert np.array_equal(external_step(plant, (r, c), [move]), robot_step((r, c), [move], native))


def test_adapter_closed_loop_is_trace_identical(tmp_path):
    cfg_file = tmp_path / "g.cfg"
    cfg_file.write_text("[grid]\nrows = 8\ncols = 7\ndanger_blocks = [[0, 1, 0, 3], [4, 7, 4, 6]]\ninitial = [[3, 3]]\n")
    native = GridRobot(GridConfig(8, 7, arena_8x7().danger, initial=((3, 3),)))
    cause = CombinedCause((CauseClause(0, 0.0, 1, StateAtom(0, "<", 3.0)),))
    label = parse("(x0 < 2 & x1 < 4) | (x0 > 3 & x1 > 3)", 2, 1)
    with ExternalPlant(SERVE + ["grid", str(cfg_file)], label_formula=label) as plant:
        ext = run_closed_loop(plant, None, cause, 3, 30, 4)
    nat = run_closed_loop(native, None, cause, 3, 30, 4)
    for a, b in zip(ext, nat):
        assert a == b


def test_adapter_process_exit():
    with pytest.raises(ProcessExited):
        ExternalPlant(script("import sys; sys.exit(3)"))


def test_adapter_malformed_reply():
    with pytest.raises(MalformedReply):
        ExternalPlant(script("input(); print('not json', flush=True); input()"))
    with pytest.raises(MalformedReply):
        ExternalPlant(script("input(); print('{\"n\": 1}', flush=True); input()"))


def test_adapter_timeout():
    with pytest.raises(ReplyTimeout):
        ExternalPlant(script("import time; input(); time.sleep(30)"), timeout=0.5)


def test_adapter_dimension_error():
    body = (
        "import json\n"
        "input(); print(json.dumps({'n': 2, 'm': 1, 'control_sets': [[0, 1]]}), flush=True)\n"
        "input(); print(json.dumps({'x_next': [1, 2, 3]}), flush=True)\n"
        "input()\n"
    )
    with ExternalPlant(script(body)) as plant:
        with pytest.raises(DimensionError):
            external_step(plant, [0, 0], [0])
