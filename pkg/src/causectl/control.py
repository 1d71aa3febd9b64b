"""Cause-avoiding feedback control and the mine/control/simulate refinement loop."""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng as rngs
from .data import ControlSpace, Dataset, LabeledTrace
from .logic.formula import And, ControlAtom, Formula, PastGlobally, TrueF, max_var_indices
from .logic.semantics import evaluate
from .logic.trace import Trace
from .mining import (
    CombinedCause,
    CauseClause,
    ParameterDomain,
    SearchParams,
    confusion_counts,
    formula_search,
)
from .plants.base import Plant

log = logging.getLogger(__name__)


def shift_clause(clause: CauseClause) -> Formula:
    """One-step-earlier form: false at k guarantees the clause is false at k+1."""
    control = PastGlobally(ControlAtom(clause.signal, clause.value), 0, clause.bound - 1)
    if isinstance(clause.general, TrueF):
        return control
    return And(control, clause.general)


def check_guarantee(cause: CombinedCause, space: ControlSpace) -> bool:
    """Sufficient condition under which the controller never lets the cause hold."""
    return all(c.bound >= 2 for c in cause) and all(len(s) >= 2 for s in space.sets)


class _History:
    """Sample view over the memory buffer plus one candidate sample."""

    __slots__ = ("states", "controls")

    def __init__(self, states, controls):
        self.states = states
        self.controls = controls


@dataclass
class ControllerState:
    cause: CombinedCause
    space: ControlSpace
    rng: np.random.Generator
    fallback: str = "uniform"
    memory: deque = field(init=False)

    def __post_init__(self):
        if self.fallback not in ("uniform", "min-satisfied"):
            raise ValueError(f"unknown fallback {self.fallback!r}")
        depth = max(self.cause.length - 1, 0)
        self.memory = deque(maxlen=depth)
        self.shifted = [shift_clause(c) for c in self.cause]
        self.candidates = self.space.product()
        self.state_index_needed = max((max_var_indices(s)[0] for s in self.shifted), default=-1)
        for c in self.cause:
            if c.signal >= self.space.m:
                raise ValueError(f"cause references u{c.signal} but the control space has {self.space.m} dimensions")

    @property
    def depth(self) -> int:
        return self.memory.maxlen

    def reset(self) -> None:
        self.memory.clear()


def controller_step(st: ControllerState, x_k, space: ControlSpace | None = None) -> np.ndarray:
    """Pick a control whose successor sample cannot satisfy any clause."""
    space = space or st.space
    x_k = tuple(float(v) for v in x_k)
    if st.state_index_needed >= len(x_k):
        raise ValueError(f"cause references x{st.state_index_needed} but the state has {len(x_k)} entries")
    states = [s for s, _ in st.memory] + [x_k]
    controls = [u for _, u in st.memory] + [None]
    view = _History(states, controls)
    k = len(states) - 1
    pool = list(st.candidates)
    chosen = None
    fewest = None
    while pool:
        i = int(st.rng.integers(len(pool)))
        u = pool[i]
        pool[i] = pool[-1]
        pool.pop()
        controls[k] = u
        hits = 0
        for phi in st.shifted:
            if evaluate(phi, view, k):
                hits += 1
                if st.fallback == "uniform":
                    break
        if hits == 0:
            chosen = u
            break
        if fewest is None or hits < fewest[0]:
            fewest = (hits, u)
    if chosen is None:
        if st.fallback == "min-satisfied" and fewest is not None:
            chosen = fewest[1]
        else:
            chosen = st.candidates[int(st.rng.integers(len(st.candidates)))]
    if st.memory.maxlen:
        st.memory.append((x_k, chosen))
    return np.array(chosen, dtype=float)


Labeler = Callable[[np.ndarray, np.ndarray], int]


def run_closed_loop(
    plant: Plant,
    labeler: Optional[Labeler],
    cause: CombinedCause,
    traces: int,
    length: int,
    seed: int,
    fallback: str = "uniform",
    meta: dict | None = None,
) -> Dataset:
    """Simulate ``traces`` runs of ``length`` samples each under the cause-avoiding controller."""
    if length < 1 and traces > 0:
        raise ValueError("trace length must be at least 1")
    labeler = labeler or plant.label
    out = []
    for t in range(traces):
        plant_rng = rngs.stream(seed, "plant", t)
        st = ControllerState(cause, plant.space, rngs.stream(seed, "controller", t), fallback)
        x = np.asarray(plant.initial_state(plant_rng), dtype=float)
        xs, us, ls = [], [], []
        for k in range(length):
            u = controller_step(st, x)
            xs.append(x)
            us.append(u)
            ls.append(int(labeler(x, u)))
            if k + 1 < length:
                x = np.asarray(plant.step(x, u, plant_rng), dtype=float)
        out.append(LabeledTrace(Trace(np.array(xs), np.array(us)), ls))
    info = {"plant": plant.name, "seed": int(seed), "generator": "closed-loop" if len(cause) else "random"}
    if len(cause):
        info["cause"] = str(cause)
    info.update(meta or {})
    return Dataset(tuple(out), plant.n, plant.space, info)


def simulate_random(plant: Plant, labeler: Optional[Labeler], traces: int, length: int, seed: int, meta=None) -> Dataset:
    """Uniform i.i.d. controls; the controller with an empty cause accepts its first draw."""
    return run_closed_loop(plant, labeler, CombinedCause(), traces, length, seed, meta=meta)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    violations: int
    rate: float
    clauses: tuple[CauseClause, ...] = ()
    tp: Optional[int] = None
    fp: Optional[int] = None
    seconds: float = 0.0

    @property
    def formula_text(self) -> str:
        return str(CombinedCause(self.clauses)) if self.clauses else ""


@dataclass
class SynthesisRun:
    bound: float
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "running"  # bound | no-gain | cap
    datasets: list[Dataset] = field(default_factory=list)

    @property
    def violation_counts(self) -> list[int]:
        return [r.violations for r in self.records]


def synthesize_iterative(
    plant: Plant,
    labeler: Optional[Labeler],
    search: SearchParams,
    domain: ParameterDomain | Callable[[Dataset], ParameterDomain],
    bound: float,
    traces: int,
    length: int,
    seed: int,
    max_iterations: int = 20,
    keep_datasets: bool = False,
    exclude_known: bool = True,
    fallback: str = "uniform",
) -> tuple[CombinedCause, SynthesisRun]:
    """Alternate cause mining and closed-loop simulation until the violation rate is at most ``bound``.

    ``domain`` may be a callable building the grids from each iteration's dataset.
    Stops with status ``bound``, ``no-gain`` (search found no clause) or ``cap``.
    """
    if not 0 <= bound <= 1:
        raise ValueError("bound must lie in [0, 1]")
    run = SynthesisRun(bound)
    cause = CombinedCause()
    data = simulate_random(plant, labeler, traces, length, rngs.derive_seed(seed, "dataset", 0))
    for i in range(1, max_iterations + 1):
        started = time.perf_counter()
        if keep_datasets:
            run.datasets.append(data)
        grids = domain(data) if callable(domain) else domain
        found = formula_search(search, data, grids, exclude=cause.clauses if exclude_known else ())
        counts = confusion_counts(found.formula, data) if len(found) else None
        run.records.append(
            IterationRecord(
                i,
                data.violations,
                data.violation_rate(),
                found.clauses,
                counts.tp if counts else None,
                counts.fp if counts else None,
                time.perf_counter() - started,
            )
        )
        log.info("iteration %d: %d violations, mined %s", i, data.violations, found or "nothing")
        if not len(found):
            run.status = "no-gain"
            return cause, run
        cause = cause.with_clauses(found.clauses)
        data = run_closed_loop(plant, labeler, cause, traces, length, rngs.derive_seed(seed, "dataset", i), fallback)
        if data.violation_rate() <= bound:
            if keep_datasets:
                run.datasets.append(data)
            run.records.append(IterationRecord(i + 1, data.violations, data.violation_rate()))
            run.status = "bound"
            return cause, run
    if keep_datasets:
        run.datasets.append(data)
    run.records.append(IterationRecord(max_iterations + 1, data.violations, data.violation_rate()))
    run.status = "cap"
    log.warning("iteration cap %d reached with violation rate %.4f > %.4f", max_iterations, data.violation_rate(), bound)
    return cause, run
