from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Trace:
    """Samples (x_0, u_0) ... (x_N, u_N); arrays are read-only after construction."""

    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        xs = np.array(self.states, dtype=float, copy=True)
        us = np.array(self.controls, dtype=float, copy=True)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if us.ndim == 1:
            us = us.reshape(-1, 1)
        if xs.ndim != 2 or us.ndim != 2:
            raise ValueError("states and controls must be 2-D (samples x dimension)")
        if len(xs) != len(us):
            raise ValueError(f"{len(xs)} state samples but {len(us)} control samples")
        if len(xs) == 0:
            raise ValueError("a trace needs at least one sample")
        xs.setflags(write=False)
        us.setflags(write=False)
        object.__setattr__(self, "states", xs)
        object.__setattr__(self, "controls", us)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.controls.shape[1]

    @property
    def horizon(self) -> int:
        """Last index N."""
        return len(self.states) - 1

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return np.array_equal(self.states, other.states) and np.array_equal(self.controls, other.controls)

    __hash__ = None
