import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causectl.control import (
    ControllerState,
    check_guarantee,
    controller_step,
    run_closed_loop,
    shift_clause,
    simulate_random,
    synthesize_iterative,
)
from causectl.data import ControlSpace
from causectl.logic import TRUE, StateAtom, parse, satisfaction
from causectl.logic.reference import holds
from causectl.mining import CauseClause, CombinedCause, ParameterDomain, SearchParams
from causectl.plants import GridConfig, GridRobot, arena_8x7
from causectl.plants.base import Plant

from strategies import random_atom, random_trace

SPACE2 = ControlSpace(((0.0, 1.0),))
EX_CLAUSE = CauseClause(0, 0.0, 1, StateAtom(3, ">", 10.0))


class NoisyPlant(Plant):
    """Small random nonlinear plant for closed-loop property tests."""

    name = "noisy"

    def __init__(self, n, space, seed):
        self.n = n
        self.space = space
        self.A = np.random.default_rng(seed).normal(0, 1, (n, n + space.m))

    def initial_state(self, rng):
        return rng.uniform(-1, 1, self.n)

    def step(self, x, u, rng):
        return np.tanh(self.A @ np.concatenate([x, u]) + rng.normal(0, 0.3, self.n))

    def label(self, x, u):
        return int(x[0] > 0.5)


def random_guarded_cause(rng, n, space):
    clauses = []
    for _ in range(int(rng.integers(1, 5))):
        j = int(rng.integers(space.m))
        general = random_atom(rng, n, space.m)
        if rng.random() < 0.5:
            general = general & random_atom(rng, n, space.m) if rng.random() < 0.5 else general | random_atom(rng, n, space.m)
        clauses.append(CauseClause(j, float(rng.choice(space.sets[j])), int(rng.integers(2, 4)), general))
    return CombinedCause(tuple(clauses))


def test_shift_examples():
    assert str(shift_clause(EX_CLAUSE)) == "((G-[0,0] u0 = 0) & x3 > 10)"
    assert shift_clause(CauseClause(0, 1.0, 2, StateAtom(0, ">", 1.0))).left.hi == 1
    assert shift_clause(CauseClause(0, 1.0, 3, TRUE)) == parse("G-[0,2] u0 = 1", 1, 1)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_shift_is_one_step_sound(seed):
    rng = np.random.default_rng(seed)
    general = random_atom(rng) if rng.random() < 0.5 else random_atom(rng) & random_atom(rng)
    clause = CauseClause(int(rng.integers(2)), float(rng.choice([0.0, 1.0, 2.0])), int(rng.integers(1, 4)), general)
    tr = random_trace(rng, int(rng.integers(2, 12)))
    shifted = shift_clause(clause)
    for k in range(len(tr) - 1):
        if not holds(shifted, tr, k):
            assert not holds(clause.formula, tr, k + 1)


def test_controller_blocks_the_only_bad_value():
    cause = CombinedCause((EX_CLAUSE,))
    x = np.array([0, 0, 0, 12.0])
    for seed in range(20):
        st_ = ControllerState(cause, SPACE2, np.random.default_rng(seed))
        assert controller_step(st_, x)[0] == 1.0


def test_controller_free_when_general_false():
    cause = CombinedCause((EX_CLAUSE,))
    seen = set()
    for seed in range(40):
        st_ = ControllerState(cause, SPACE2, np.random.default_rng(seed))
        seen.add(float(controller_step(st_, np.array([0, 0, 0, 5.0]))[0]))
    assert seen == {0.0, 1.0}


def test_controller_falls_back_when_everything_blocked():
    cause = CombinedCause((CauseClause(0, 0.0, 1, TRUE), CauseClause(0, 1.0, 1, TRUE)))
    seen = set()
    for seed in range(40):
        st_ = ControllerState(cause, SPACE2, np.random.default_rng(seed))
        u = controller_step(st_, np.zeros(1))
        assert SPACE2.contains(u)
        seen.add(float(u[0]))
    assert seen == {0.0, 1.0}


def test_min_satisfied_fallback_prefers_fewest_hits():
    space = ControlSpace(((0.0, 1.0),))
    cause = CombinedCause(
        (CauseClause(0, 0.0, 1, TRUE), CauseClause(0, 1.0, 1, TRUE), CauseClause(0, 1.0, 1, StateAtom(0, ">", -1.0)))
    )
    for seed in range(20):
        st_ = ControllerState(cause, space, np.random.default_rng(seed), fallback="min-satisfied")
        assert controller_step(st_, np.zeros(1))[0] == 0.0
    with pytest.raises(ValueError):
        ControllerState(cause, space, np.random.default_rng(0), fallback="nope")


def test_controller_dimension_errors():
    with pytest.raises(ValueError):
        ControllerState(CombinedCause((CauseClause(1, 0.0, 1, TRUE),)), SPACE2, np.random.default_rng(0))
    st_ = ControllerState(CombinedCause((EX_CLAUSE,)), SPACE2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        controller_step(st_, np.zeros(2))


def test_memory_depth():
    cause = CombinedCause((CauseClause(0, 0.0, 3, TRUE), EX_CLAUSE))
    st_ = ControllerState(cause, SPACE2, np.random.default_rng(0))
    assert st_.depth == 2
    for k in range(5):
        controller_step(st_, np.zeros(4))
        assert len(st_.memory) == min(k + 1, 2)
    assert ControllerState(CombinedCause(), SPACE2, np.random.default_rng(0)).depth == 0


def test_empty_cause_is_uniform():
    space = ControlSpace(((0.0, 1.0, 2.0), (5.0, 6.0)))
    st_ = ControllerState(CombinedCause(), space, np.random.default_rng(11))
    draws = [tuple(controller_step(st_, np.zeros(1))) for _ in range(10_000)]
    cells = space.product()
    counts = np.array([draws.count(c) for c in cells])
    expected = len(draws) / len(cells)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 5 degrees of freedom, p = 0.01 critical value
    assert chi2 < 15.09


def test_check_guarantee():
    b2 = CombinedCause((CauseClause(0, 0.0, 2, TRUE),))
    assert check_guarantee(b2, SPACE2)
    assert not check_guarantee(CombinedCause((EX_CLAUSE,)), SPACE2)
    assert check_guarantee(CombinedCause(), SPACE2)
    assert not check_guarantee(b2, ControlSpace(((0.0,),)))


@pytest.mark.parametrize("seed", range(60))
def test_guarantee_from_second_step(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    space = ControlSpace(tuple(tuple(float(v) for v in range(int(rng.integers(2, 4)))) for _ in range(int(rng.integers(1, 3)))))
    cause = random_guarded_cause(rng, n, space)
    data = run_closed_loop(NoisyPlant(n, space, seed), None, cause, 3, 25, seed)
    for lt in data:
        assert not satisfaction(cause.formula, lt.trace)[2:].any()


def test_closed_loop_basics():
    plant = GridRobot(GridConfig(3, 3))
    data = run_closed_loop(plant, None, CombinedCause(), 4, 10, 5)
    assert len(data) == 4 and all(len(lt) == 10 for lt in data)
    assert data.violations == 0
    assert data.meta["generator"] == "random"
    assert len(run_closed_loop(plant, None, CombinedCause(), 0, 10, 5)) == 0
    # an empty cause reproduces the random baseline exactly
    assert simulate_random(plant, None, 4, 10, 5) == data
    again = run_closed_loop(plant, None, CombinedCause(), 4, 10, 5)
    assert again == data
    other = run_closed_loop(plant, None, CombinedCause(), 4, 10, 6)
    assert other != data


def test_synthesize_bound_one_stops_immediately():
    plant = GridRobot(arena_8x7())
    cause, run = synthesize_iterative(
        plant, None, SearchParams(1, 1), lambda d: ParameterDomain.from_dataset(d, 1.0), 1.0, 5, 30, 0
    )
    assert run.status == "bound" and len(cause) == 1
    assert [r.iteration for r in run.records] == [1, 2]


def test_synthesize_grid_reaches_zero():
    plant = GridRobot(arena_8x7())
    cause, run = synthesize_iterative(
        plant, None, SearchParams(1, 1), lambda d: ParameterDomain.from_dataset(d, 1.0), 0.0, 20, 100, 7,
        keep_datasets=True,
    )
    assert run.status == "bound"
    assert run.records[-1].violations == 0
    assert len(run.datasets) == len(run.records)
    for r in run.records[:-1]:
        assert len(r.clauses) == 1 and r.tp is not None


def test_synthesize_cap_and_no_gain(caplog):
    plant = GridRobot(arena_8x7())
    dom = lambda d: ParameterDomain.from_dataset(d, 1.0)
    _, run = synthesize_iterative(plant, None, SearchParams(0, 0), dom, 0.0, 5, 30, 1, max_iterations=1)
    assert run.status == "cap" and len(run.records) == 2
    assert "iteration cap" in caplog.text
    safe = GridRobot(GridConfig(3, 3))
    cause, run = synthesize_iterative(safe, None, SearchParams(0, 0), dom, 0.0, 3, 10, 1)
    assert run.status == "no-gain" and len(cause) == 0
    with pytest.raises(ValueError):
        synthesize_iterative(safe, None, SearchParams(), dom, 1.5, 3, 10, 1)
