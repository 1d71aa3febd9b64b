"""Scoring formulas as per-step classifiers and searching for combined causes.

A cause clause has the fixed shape::

    (G-[1,b] u_j = c) & (F-[1,1] general)

and a combined cause is the disjunction of clauses.  The search enumerates
parametric general parts by operator count, grid-searches their parameters
and grows the disjunction greedily while the F-beta score improves by more
than the configured minimum gain.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .data import ControlSpace, Dataset
from .logic.formula import (
    CONTROL_VALUE,
    FALSE,
    STATE_THRESHOLD,
    TIME_BOUND,
    And,
    ControlAtom,
    FalseF,
    Formula,
    Not,
    Or,
    Param,
    PastEventually,
    PastGlobally,
    StateAtom,
    TEMPORAL,
    disjunction,
    format_formula,
    free_parameters,
    instantiate,
    length,
    operator_count,
    walk,
)
from .logic.semantics import SignalBank, check_dimensions


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


def f_beta(counts: ConfusionCounts, beta: float = 1.0) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if counts.tp == 0:
        return 0.0
    precision = counts.tp / (counts.tp + counts.fp)
    recall = counts.tp / (counts.tp + counts.fn)
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


@dataclass(frozen=True)
class SearchParams:
    oc_min: int = 0
    oc_max: int = 0
    max_clauses: Optional[int] = 1
    min_gain: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.oc_min < 0 or self.oc_max < 0:
            raise ValueError("operator-count bounds must be non-negative")
        if self.oc_min > self.oc_max:
            raise ValueError(f"oc_min={self.oc_min} exceeds oc_max={self.oc_max}")
        if self.max_clauses is not None and self.max_clauses < 0:
            raise ValueError("max_clauses must be non-negative or None (unbounded)")
        if self.min_gain < 0:
            raise ValueError("min_gain must be non-negative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class ParameterDomain:
    """Finite candidate grids for every kind of parameter slot."""

    thresholds: tuple[tuple[float, ...], ...]
    controls: tuple[tuple[float, ...], ...]
    bounds: tuple[int, ...] = (1, 2)
    inner_bounds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(tuple(float(v) for v in g) for g in self.thresholds))
        object.__setattr__(self, "controls", tuple(tuple(float(v) for v in g) for g in self.controls))
        object.__setattr__(self, "bounds", tuple(int(b) for b in self.bounds))
        object.__setattr__(self, "inner_bounds", tuple(int(b) for b in self.inner_bounds))
        if not self.bounds or min(self.bounds) < 1:
            raise ValueError("the clause bound grid must be non-empty with every b >= 1")
        if any(b < 0 for b in self.inner_bounds):
            raise ValueError("inner time bounds must be natural numbers")

    @classmethod
    def from_dataset(
        cls,
        data: Dataset,
        step: float = 1.0,
        bounds: Sequence[int] = (1, 2),
        inner_bounds: Sequence[int] = (0, 1, 2),
    ) -> "ParameterDomain":
        """Thresholds on multiples of ``step`` covering the observed range of each state variable."""
        if step <= 0:
            raise ValueError("threshold step must be positive")
        grids = []
        if len(data):
            xs = np.concatenate([lt.trace.states for lt in data])
        else:
            xs = np.zeros((0, data.n))
        for i in range(data.n):
            if len(xs) == 0:
                grids.append(())
                continue
            lo = math.floor(xs[:, i].min() / step)
            hi = math.ceil(xs[:, i].max() / step)
            grids.append(tuple(float(k * step) for k in range(lo, hi + 1)))
        return cls(tuple(grids), data.space.sets, tuple(bounds), tuple(inner_bounds))


# ---------------------------------------------------------------- cause shapes

@dataclass(frozen=True)
class CauseClause:
    """``(G-[1,bound] u_signal = value) & (F-[1,1] general)``."""

    signal: int
    value: float
    bound: int
    general: Formula

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if self.bound < 1:
            raise ValueError("clause bound b must be at least 1")

    @property
    def control_part(self) -> Formula:
        return PastGlobally(ControlAtom(self.signal, self.value), 1, self.bound)

    @property
    def formula(self) -> Formula:
        return And(self.control_part, PastEventually(self.general, 1, 1))

    @property
    def length(self) -> int:
        return max(self.bound, 1 + length(self.general))

    def __str__(self) -> str:
        return format_formula(self.formula)


@dataclass(frozen=True)
class CombinedCause:
    """Disjunction of cause clauses; no clauses means ``false``."""

    clauses: tuple[CauseClause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    @property
    def formula(self) -> Formula:
        if not self.clauses:
            return FALSE
        return disjunction(c.formula for c in self.clauses)

    @property
    def length(self) -> int:
        return max((c.length for c in self.clauses), default=0)

    def __str__(self) -> str:
        return format_formula(self.formula)

    def with_clauses(self, clauses) -> "CombinedCause":
        """Append clauses, dropping any already present."""
        out = list(self.clauses)
        for c in clauses:
            if c not in out:
                out.append(c)
        return CombinedCause(tuple(out))

    @classmethod
    def from_formula(cls, phi: Formula) -> "CombinedCause":
        """Recover the clause list from a formula of the combined-cause shape."""
        if isinstance(phi, FalseF):
            return cls(())
        disjuncts = []
        stack = [phi]
        while stack:
            node = stack.pop()
            if isinstance(node, Or):
                stack.append(node.right)
                stack.append(node.left)
            else:
                disjuncts.append(node)
        return cls(tuple(_as_clause(d) for d in disjuncts))


def _as_clause(phi: Formula) -> CauseClause:
    ok = (
        isinstance(phi, And)
        and isinstance(phi.left, PastGlobally)
        and isinstance(phi.left.child, ControlAtom)
        and phi.left.lo == 1
        and isinstance(phi.right, PastEventually)
        and (phi.right.lo, phi.right.hi) == (1, 1)
    )
    if not ok:
        raise ValueError(f"not a cause clause of the form (G-[1,b] uj = c) & (F-[1,1] phi): {phi}")
    atom = phi.left.child
    return CauseClause(atom.var, atom.value, phi.left.hi, phi.right.child)


# ---------------------------------------------------------------- scoring

class ScoringContext:
    """Dataset laid out for repeated classifier scoring."""

    def __init__(self, data: Dataset):
        self.data = data
        self.bank = SignalBank.from_traces(lt.trace for lt in data)
        if len(data):
            self.labels = np.concatenate([lt.labels for lt in data]).astype(bool)
        else:
            self.labels = np.zeros(0, dtype=bool)
        self.shortest = min((len(lt) for lt in data), default=0)
        self._masks: dict[int, tuple] = {}

    def masks(self, scored_from: int):
        hit = self._masks.get(scored_from)
        if hit is None:
            mask = self.bank.local >= scored_from
            pos = self.labels & mask
            neg = ~self.labels & mask
            hit = (pos, neg, int(pos.sum()), int(neg.sum()))
            self._masks[scored_from] = hit
        return hit

    def counts(self, signal: np.ndarray, scored_from: int) -> ConfusionCounts:
        pos, neg, npos, nneg = self.masks(scored_from)
        tp = int(np.count_nonzero(signal & pos))
        fp = int(np.count_nonzero(signal & neg))
        return ConfusionCounts(tp, fp, nneg - fp, npos - tp)

    def check(self, phi: Formula, scored_from: int) -> None:
        check_dimensions(phi, self.data.n, self.data.m)
        if len(self.data) and self.shortest < scored_from:
            raise ValueError(f"a trace has {self.shortest} samples, shorter than the formula length {scored_from}")


def confusion_counts(phi: Formula, data, context: ScoringContext | None = None) -> ConfusionCounts:
    """Classify index i of each trace (i >= length(phi)) by the truth of ``phi`` at i."""
    if isinstance(phi, CombinedCause):
        phi = phi.formula
    ctx = context or ScoringContext(data)
    scored_from = length(phi)
    ctx.check(phi, scored_from)
    return ctx.counts(ctx.bank.signal(phi), scored_from)


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class ClauseTemplate:
    """A clause whose general part (and bound ``b``) still carry parameter slots."""

    signal: int
    value: float
    general: Formula

    BOUND = Param("b", TIME_BOUND)

    @property
    def formula(self) -> Formula:
        return And(
            PastGlobally(ControlAtom(self.signal, self.value), 1, self.BOUND),
            PastEventually(self.general, 1, 1),
        )

    @property
    def operator_count(self) -> int:
        return operator_count(self.general)

    def __str__(self) -> str:
        return format_formula(self.formula)


def _atom_kinds(n: int, m: int) -> list[tuple]:
    kinds = []
    for i in range(n):
        kinds.append(("x", i, ">"))
        kinds.append(("x", i, "<"))
    for j in range(m):
        kinds.append(("u", j, "="))
    return kinds


class _Slots:
    def __init__(self):
        self.k = 0

    def new(self, kind: str) -> Param:
        p = Param(f"p{self.k}", kind)
        self.k += 1
        return p


def _make_atom(kind, slots: _Slots) -> Formula:
    if kind[0] == "x":
        return StateAtom(kind[1], kind[2], slots.new(STATE_THRESHOLD))
    return ControlAtom(kind[1], slots.new(CONTROL_VALUE))


def _chain(kinds, connective, slots) -> Formula:
    out = _make_atom(kinds[0], slots)
    for k in kinds[1:]:
        out = connective(out, _make_atom(k, slots))
    return out


def general_templates(n: int, m: int, oc: int) -> list[Formula]:
    """Parametric general parts with exactly ``oc`` operators.

    The fragment: a chain of ``oc + 1`` distinct atom kinds joined by one
    connective (``&`` or ``|``), or a single ``!``, ``F-`` or ``G-`` wrapper
    around a chain of ``oc`` atoms.
    """
    kinds = _atom_kinds(n, m)
    out = []
    if oc + 1 <= len(kinds):
        for combo in itertools.combinations(kinds, oc + 1):
            for conn in ((And, Or) if oc > 0 else (None,)):
                slots = _Slots()
                out.append(_chain(combo, conn, slots) if conn else _make_atom(combo[0], slots))
    if 1 <= oc <= len(kinds):
        for combo in itertools.combinations(kinds, oc):
            for conn in ((And, Or) if oc > 1 else (None,)):
                for wrap in ("!", "F", "G"):
                    slots = _Slots()
                    if wrap == "!":
                        inner = _chain(combo, conn, slots) if conn else _make_atom(combo[0], slots)
                        out.append(Not(inner))
                        continue
                    lo, hi = slots.new(TIME_BOUND), slots.new(TIME_BOUND)
                    inner = _chain(combo, conn, slots) if conn else _make_atom(combo[0], slots)
                    cls = PastEventually if wrap == "F" else PastGlobally
                    out.append(cls(inner, lo, hi))
    return out


def enumerate_templates(n: int, m: int, space: ControlSpace, params: SearchParams) -> Iterator[ClauseTemplate]:
    """Every clause template with general operator count in [oc_min, oc_max].

    Ordered by (operator count, canonical text). The clause scaffold
    (G-, &, F-) is not counted.
    """
    if space.m != m:
        raise ValueError(f"control space has {space.m} dimensions, expected {m}")
    for oc in range(params.oc_min, params.oc_max + 1):
        level = [
            ClauseTemplate(j, c, g)
            for g in general_templates(n, m, oc)
            for j in range(m)
            for c in space.sets[j]
        ]
        level.sort(key=str)
        yield from level


# ---------------------------------------------------------------- parameter search

def _slot_grids(general: Formula, domain: ParameterDomain) -> dict[str, tuple]:
    grids: dict[str, tuple] = {}
    for node in walk(general):
        if isinstance(node, StateAtom) and isinstance(node.threshold, Param):
            grids[node.threshold.name] = domain.thresholds[node.var]
        elif isinstance(node, ControlAtom) and isinstance(node.value, Param):
            grids[node.value.name] = domain.controls[node.var]
        elif isinstance(node, TEMPORAL):
            for v in (node.lo, node.hi):
                if isinstance(v, Param):
                    grids[v.name] = domain.inner_bounds
    for name, grid in grids.items():
        if not grid:
            raise ValueError(f"empty grid for parameter slot {name!r}")
    return grids


def general_valuations(general: Formula, domain: ParameterDomain) -> Iterator[Formula]:
    """Every well-formed instantiation of ``general`` over the domain grids."""
    slots = [p.name for p in free_parameters(general)]
    grids = _slot_grids(general, domain)
    for values in itertools.product(*(grids[s] for s in slots)):
        try:
            yield instantiate(general, dict(zip(slots, values)))
        except ValueError:
            continue  # interval with lo > hi


@dataclass(frozen=True)
class Candidate:
    clause: CauseClause
    score: float
    counts: ConfusionCounts
    operator_count: int

    def beats(self, other: Optional["Candidate"]) -> bool:
        """Higher score, then more true positives, fewer operators, smaller b, canonical text."""
        if other is None:
            return True
        a = (-self.score, -self.counts.tp, self.operator_count, self.clause.bound)
        b = (-other.score, -other.counts.tp, other.operator_count, other.clause.bound)
        if a != b:
            return a < b
        return str(self.clause) < str(other.clause)


def _best_in_template(
    template: ClauseTemplate,
    domain: ParameterDomain,
    ctx: ScoringContext,
    current: CombinedCause,
    beta: float,
    exclude: Sequence[CauseClause] = (),
) -> Optional[Candidate]:
    bank = ctx.bank
    cur_sig = bank.signal(current.formula)
    cur_len = current.length
    oc = template.operator_count
    if not domain.bounds:
        raise ValueError("empty grid for parameter slot 'b'")
    controls = {b: bank.signal(PastGlobally(ControlAtom(template.signal, template.value), 1, b)) for b in domain.bounds}
    best = None
    for general in general_valuations(template.general, domain):
        prev = bank.signal(PastEventually(general, 1, 1))
        glen = 1 + length(general)
        for b in domain.bounds:
            clause = CauseClause(template.signal, template.value, b, general)
            if clause in current.clauses or clause in exclude:
                continue
            scored_from = max(cur_len, b, glen)
            counts = ctx.counts(cur_sig | (controls[b] & prev), scored_from)
            cand = Candidate(clause, f_beta(counts, beta), counts, oc)
            if cand.beats(best):
                best = cand
    return best


def optimize_parameters(
    template: ClauseTemplate,
    domain: ParameterDomain,
    data: Dataset,
    current: CombinedCause = CombinedCause(),
    beta: float = 1.0,
    context: ScoringContext | None = None,
) -> tuple[CauseClause, float]:
    """Exhaustive grid search for the valuation maximizing F-beta of ``current | clause``."""
    ctx = context or ScoringContext(data)
    check_dimensions(template.formula, data.n, data.m)
    best = _best_in_template(template, domain, ctx, current, beta)
    if best is None:
        raise ValueError(f"template {template} has no admissible valuation")
    return best.clause, best.score


def formula_search(
    params: SearchParams,
    data: Dataset,
    domain: ParameterDomain,
    exclude: Sequence[CauseClause] = (),
) -> CombinedCause:
    """Greedily grow a disjunction of clauses while each one adds more than ``min_gain``.

    Clauses in ``exclude`` are never proposed.
    """
    result = CombinedCause()
    if params.max_clauses == 0 or len(data) == 0:
        return result
    ctx = ScoringContext(data)
    templates = list(enumerate_templates(data.n, data.m, data.space, params))
    score = 0.0
    while params.max_clauses is None or len(result) < params.max_clauses:
        best = None
        for template in templates:
            cand = _best_in_template(template, domain, ctx, result, params.beta, exclude)
            if cand is not None and cand.beats(best):
                best = cand
        if best is None or best.score - score <= params.min_gain:
            break
        result = result.with_clauses([best.clause])
        score = best.score
    return result


@dataclass(frozen=True)
class ClauseScore:
    text: str
    counts: ConfusionCounts
    score: float


def score_report(cause: CombinedCause, data: Dataset, beta: float = 1.0) -> list[ClauseScore]:
    """Per-clause scores followed by the score of the whole disjunction."""
    ctx = ScoringContext(data)
    rows = []
    for clause in cause:
        counts = confusion_counts(clause.formula, data, ctx)
        rows.append(ClauseScore(str(clause), counts, f_beta(counts, beta)))
    counts = confusion_counts(cause.formula, data, ctx)
    rows.append(ClauseScore(str(cause), counts, f_beta(counts, beta)))
    return rows
