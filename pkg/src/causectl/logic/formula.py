"""Past-time STL abstract syntax, structural measures and parametric instantiation."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Iterator, Mapping, Union

STATE_THRESHOLD = "state-threshold"
CONTROL_VALUE = "control-value"
TIME_BOUND = "time-bound"


@dataclass(frozen=True)
class Param:
    """A named parameter slot standing in for a constant."""

    name: str
    kind: str

    def __str__(self) -> str:
        return f"{self.name}?"


Number = Union[float, Param]
Bound = Union[int, Param]


class Formula:
    """Base class of all formula nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return format_formula(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class StateAtom(Formula):
    var: int
    relation: str  # "<" or ">"
    threshold: Number

    def __post_init__(self):
        if self.relation not in ("<", ">"):
            raise ValueError(f"state relation must be '<' or '>', got {self.relation!r}")


@dataclass(frozen=True)
class ControlAtom(Formula):
    var: int
    value: Number


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


def _check_interval(lo: Bound, hi: Bound) -> None:
    for v in (lo, hi):
        if not isinstance(v, Param) and (not isinstance(v, int) or isinstance(v, bool) or v < 0):
            raise ValueError(f"interval bounds must be natural numbers, got {v!r}")
    if not isinstance(lo, Param) and not isinstance(hi, Param) and lo > hi:
        raise ValueError(f"malformed interval [{lo},{hi}]: lower bound exceeds upper bound")


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    right: Formula
    lo: Bound
    hi: Bound

    def __post_init__(self):
        _check_interval(self.lo, self.hi)

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class PastEventually(Formula):
    child: Formula
    lo: Bound
    hi: Bound

    def __post_init__(self):
        _check_interval(self.lo, self.hi)

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class PastGlobally(Formula):
    child: Formula
    lo: Bound
    hi: Bound

    def __post_init__(self):
        _check_interval(self.lo, self.hi)

    def children(self):
        return (self.child,)


ATOMS = (TrueF, FalseF, StateAtom, ControlAtom)
TEMPORAL = (Since, PastEventually, PastGlobally)


def length(phi: Formula) -> int:
    """Oldest relative time index needed to evaluate ``phi``."""
    if isinstance(phi, ATOMS):
        return 0
    if isinstance(phi, Not):
        return length(phi.child)
    if isinstance(phi, (And, Or)):
        return max(length(phi.left), length(phi.right))
    if isinstance(phi, TEMPORAL):
        if isinstance(phi.hi, Param):
            raise ValueError("length of a formula with an unbound time slot is undefined")
        return phi.hi + max(length(c) for c in phi.children())
    raise TypeError(f"not a formula: {phi!r}")


def operator_count(phi: Formula) -> int:
    if isinstance(phi, ATOMS):
        return 0
    return 1 + sum(operator_count(c) for c in phi.children())


def max_var_indices(phi: Formula) -> tuple[int, int]:
    """Largest state and control indices referenced, -1 if none."""
    xs, us = -1, -1
    for node in walk(phi):
        if isinstance(node, StateAtom):
            xs = max(xs, node.var)
        elif isinstance(node, ControlAtom):
            us = max(us, node.var)
    return xs, us


def walk(phi: Formula) -> Iterator[Formula]:
    """Pre-order, left-to-right traversal."""
    yield phi
    for c in phi.children():
        yield from walk(c)


def _node_params(node: Formula) -> list[Param]:
    out = []
    if isinstance(node, StateAtom) and isinstance(node.threshold, Param):
        out.append(node.threshold)
    elif isinstance(node, ControlAtom) and isinstance(node.value, Param):
        out.append(node.value)
    elif isinstance(node, TEMPORAL):
        out.extend(v for v in (node.lo, node.hi) if isinstance(v, Param))
    return out


def free_parameters(phi: Formula) -> list[Param]:
    """Parameter slots in left-to-right tree order (interval slots before operands)."""
    seen: dict[str, Param] = {}
    _collect(phi, seen)
    return list(seen.values())


def _collect(phi: Formula, seen: dict[str, Param]) -> None:
    if isinstance(phi, Since):
        _collect(phi.left, seen)
        _add(_node_params(phi), seen)
        _collect(phi.right, seen)
        return
    _add(_node_params(phi), seen)
    for c in phi.children():
        _collect(c, seen)


def _add(params, seen):
    for p in params:
        prev = seen.get(p.name)
        if prev is not None and prev.kind != p.kind:
            raise ValueError(f"slot {p.name!r} used with kinds {prev.kind} and {p.kind}")
        seen.setdefault(p.name, p)


def is_parametric(phi: Formula) -> bool:
    return any(_node_params(n) for n in walk(phi))


def instantiate(phi: Formula, valuation: Mapping[str, float]) -> Formula:
    """Replace every parameter slot of ``phi`` by its value in ``valuation``."""
    slots = {p.name: p for p in free_parameters(phi)}
    missing = sorted(set(slots) - set(valuation))
    extra = sorted(set(valuation) - set(slots))
    if missing:
        raise ValueError(f"valuation is missing slots: {', '.join(missing)}")
    if extra:
        raise ValueError(f"valuation has unknown slots: {', '.join(extra)}")
    if not slots:
        return phi
    return _subst(phi, valuation)


def _value(v, valuation, kind):
    if not isinstance(v, Param):
        return v
    x = valuation[v.name]
    if kind == TIME_BOUND:
        if isinstance(x, bool) or int(x) != x or x < 0:
            raise ValueError(f"time-bound slot {v.name!r} needs a natural number, got {x!r}")
        return int(x)
    return float(x)


def _subst(phi: Formula, valuation) -> Formula:
    if isinstance(phi, (TrueF, FalseF)):
        return phi
    if isinstance(phi, StateAtom):
        return replace(phi, threshold=_value(phi.threshold, valuation, STATE_THRESHOLD))
    if isinstance(phi, ControlAtom):
        return replace(phi, value=_value(phi.value, valuation, CONTROL_VALUE))
    kwargs = {}
    for f in fields(phi):
        v = getattr(phi, f.name)
        if isinstance(v, Formula):
            kwargs[f.name] = _subst(v, valuation)
        else:
            kwargs[f.name] = _value(v, valuation, TIME_BOUND)
    return type(phi)(**kwargs)


# ---------------------------------------------------------------- formatting

def format_number(v: Number) -> str:
    if isinstance(v, Param):
        return str(v)
    v = float(v)
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_bound(v: Bound) -> str:
    return str(v)


def format_formula(phi: Formula) -> str:
    """Canonical, fully parenthesized text form; inverse of :func:`parse`."""
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, FalseF):
        return "false"
    if isinstance(phi, StateAtom):
        return f"x{phi.var} {phi.relation} {format_number(phi.threshold)}"
    if isinstance(phi, ControlAtom):
        return f"u{phi.var} = {format_number(phi.value)}"
    if isinstance(phi, Not):
        return f"(!{format_formula(phi.child)})"
    if isinstance(phi, And):
        return f"({format_formula(phi.left)} & {format_formula(phi.right)})"
    if isinstance(phi, Or):
        return f"({format_formula(phi.left)} | {format_formula(phi.right)})"
    interval = f"[{_fmt_bound(phi.lo)},{_fmt_bound(phi.hi)}]"
    if isinstance(phi, Since):
        return f"({format_formula(phi.left)} S{interval} {format_formula(phi.right)})"
    if isinstance(phi, PastEventually):
        return f"(F-{interval} {format_formula(phi.child)})"
    if isinstance(phi, PastGlobally):
        return f"(G-{interval} {format_formula(phi.child)})"
    raise TypeError(f"not a formula: {phi!r}")


def conjunction(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjunction(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out
