"""Boolean semantics of past-time formulas over finite traces.

Two evaluators live here:

* :func:`satisfaction` computes the truth value at every index of a trace in
  one vectorized pass (prefix sums over the window), and :class:`SignalBank`
  does the same over many traces concatenated, caching subformula signals.
* :func:`evaluate` answers a single ``(trace, k)`` query recursively and is
  what the controller calls on its short history buffer.

Both must agree exactly with :func:`causectl.logic.reference.holds`.
"""

from __future__ import annotations

import numpy as np

from .formula import (
    And,
    ControlAtom,
    FalseF,
    Formula,
    Not,
    Or,
    Param,
    PastEventually,
    PastGlobally,
    Since,
    StateAtom,
    TrueF,
    max_var_indices,
)


def _check_concrete(phi):
    if isinstance(phi, StateAtom) and isinstance(phi.threshold, Param):
        raise ValueError(f"cannot evaluate unbound slot {phi.threshold}")
    if isinstance(phi, ControlAtom) and isinstance(phi.value, Param):
        raise ValueError(f"cannot evaluate unbound slot {phi.value}")


def check_dimensions(phi: Formula, n: int, m: int) -> None:
    xs, us = max_var_indices(phi)
    if xs >= n:
        raise ValueError(f"formula references x{xs} but the trace has {n} state variables")
    if us >= m:
        raise ValueError(f"formula references u{us} but the trace has {m} control variables")


# ---------------------------------------------------------------- point queries

def evaluate(phi: Formula, trace, k: int) -> bool:
    """Truth of ``phi`` at index ``k`` of ``trace``.

    ``trace`` only needs indexable ``states`` and ``controls``.
    """
    if k < 0 or k >= len(trace.states):
        raise IndexError(f"k={k} outside trace of {len(trace.states)} samples")
    return _holds(phi, trace.states, trace.controls, k)


def _holds(phi, xs, us, k) -> bool:
    t = type(phi)
    if t is StateAtom:
        _check_concrete(phi)
        v = xs[k][phi.var]
        return bool(v > phi.threshold) if phi.relation == ">" else bool(v < phi.threshold)
    if t is ControlAtom:
        _check_concrete(phi)
        return bool(us[k][phi.var] == phi.value)
    if t is And:
        return _holds(phi.left, xs, us, k) and _holds(phi.right, xs, us, k)
    if t is Or:
        return _holds(phi.left, xs, us, k) or _holds(phi.right, xs, us, k)
    if t is Not:
        return not _holds(phi.child, xs, us, k)
    if t is PastEventually:
        lo = max(k - phi.hi, 0)
        return any(_holds(phi.child, xs, us, j) for j in range(lo, k - phi.lo + 1))
    if t is PastGlobally:
        lo = max(k - phi.hi, 0)
        return all(_holds(phi.child, xs, us, j) for j in range(lo, k - phi.lo + 1))
    if t is Since:
        # scan witnesses from the newest; the left operand must hold on [j, k]
        first = max(k - phi.hi, 0)
        j = k
        while j >= first:
            if not _holds(phi.left, xs, us, j):
                return False
            if j <= k - phi.lo and _holds(phi.right, xs, us, j):
                return True
            j -= 1
        return False
    if t is TrueF:
        return True
    if t is FalseF:
        return False
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------- whole signals

class SignalBank:
    """Satisfaction signals over a batch of traces laid end to end.

    ``local[i]`` is the index of global sample ``i`` within its own trace, so
    every window is clamped to ``[start of trace, i]``.  Signals are cached
    per subformula; formulas are hashable values so equal subtrees share work.
    """

    def __init__(self, states: np.ndarray, controls: np.ndarray, local: np.ndarray):
        self.states = states
        self.controls = controls
        self.local = local
        self.index = np.arange(len(local))
        self._cache: dict[Formula, np.ndarray] = {}

    @classmethod
    def from_traces(cls, traces) -> "SignalBank":
        traces = list(traces)
        if not traces:
            return cls(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros(0, dtype=np.int64))
        xs = np.concatenate([t.states for t in traces])
        us = np.concatenate([t.controls for t in traces])
        local = np.concatenate([np.arange(len(t), dtype=np.int64) for t in traces])
        return cls(xs, us, local)

    def __len__(self) -> int:
        return len(self.local)

    def signal(self, phi: Formula) -> np.ndarray:
        hit = self._cache.get(phi)
        if hit is None:
            hit = self._compute(phi)
            hit.setflags(write=False)
            self._cache[phi] = hit
        return hit

    def clear(self) -> None:
        self._cache.clear()

    def _compute(self, phi) -> np.ndarray:
        t = type(phi)
        size = len(self.local)
        if t is TrueF:
            return np.ones(size, dtype=bool)
        if t is FalseF:
            return np.zeros(size, dtype=bool)
        if t is StateAtom:
            _check_concrete(phi)
            col = self.states[:, phi.var]
            return col > phi.threshold if phi.relation == ">" else col < phi.threshold
        if t is ControlAtom:
            _check_concrete(phi)
            return self.controls[:, phi.var] == phi.value
        if t is Not:
            return ~self.signal(phi.child)
        if t is And:
            return self.signal(phi.left) & self.signal(phi.right)
        if t is Or:
            return self.signal(phi.left) | self.signal(phi.right)
        if t is PastEventually:
            return self.window_any(self.signal(phi.child), phi.lo, phi.hi)
        if t is PastGlobally:
            return ~self.window_any(~self.signal(phi.child), phi.lo, phi.hi)
        if t is Since:
            return self._since(self.signal(phi.left), self.signal(phi.right), phi.lo, phi.hi)
        raise TypeError(f"not a formula: {phi!r}")

    def _window(self, lo: int, hi: int):
        first = self.index - np.minimum(hi, self.local)
        last = self.index - lo
        valid = self.local >= lo
        return first, last, valid

    def window_any(self, sig: np.ndarray, lo: int, hi: int) -> np.ndarray:
        """True at i iff sig holds somewhere in [i-hi, i-lo] within the trace."""
        first, last, valid = self._window(lo, hi)
        csum = np.concatenate(([0], np.cumsum(sig, dtype=np.int64)))
        last_c = np.where(valid, last, first - 1)
        return valid & (csum[last_c + 1] - csum[first] > 0)

    def _since(self, left, right, lo, hi) -> np.ndarray:
        first, last, valid = self._window(lo, hi)
        # newest index <= i where left fails; the witness must come after it
        fail = np.where(~left, self.index, -1)
        last_fail = np.maximum.accumulate(fail) if len(fail) else fail
        first = np.maximum(first, last_fail + 1)
        ok = valid & (last >= first)
        csum = np.concatenate(([0], np.cumsum(right, dtype=np.int64)))
        lc = np.where(ok, last, 0)
        fc = np.where(ok, first, 0)
        return ok & (csum[lc + 1] - csum[fc] > 0)


def satisfaction(phi: Formula, trace) -> np.ndarray:
    """Truth value of ``phi`` at every index of ``trace``."""
    check_dimensions(phi, trace.n, trace.m)
    bank = SignalBank(np.asarray(trace.states), np.asarray(trace.controls), np.arange(len(trace), dtype=np.int64))
    return bank.signal(phi).copy()
