from __future__ import annotations

import numpy as np

from ..data import ControlSpace


class Plant:
    """A discrete-time system x' = f(x, u, w) with a finite control space.

    Subclasses set ``n``, ``space`` and ``name`` and implement
    :meth:`initial_state`, :meth:`step` and :meth:`label`.
    """

    name = "plant"
    n: int
    space: ControlSpace

    @property
    def m(self) -> int:
        return self.space.m

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def step(self, x: np.ndarray, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def label(self, x: np.ndarray, u: np.ndarray) -> int:
        raise NotImplementedError

    def close(self) -> None:
        pass
