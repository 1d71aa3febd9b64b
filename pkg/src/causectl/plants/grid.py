from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ControlSpace
from .base import Plant

NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
MOVE_NAMES = {NORTH: "N", EAST: "E", SOUTH: "S", WEST: "W"}
_DELTA = {NORTH: (-1, 0), EAST: (0, 1), SOUTH: (1, 0), WEST: (0, -1)}


@dataclass(frozen=True)
class GridConfig:
    rows: int
    cols: int
    danger: frozenset = frozenset()
    # None means uniform over every safe cell
    initial: tuple | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        danger = frozenset((int(r), int(c)) for r, c in self.danger)
        for r, c in danger:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"danger cell ({r},{c}) is outside the {self.rows}x{self.cols} grid")
        object.__setattr__(self, "danger", danger)
        if self.initial is not None:
            initial = tuple((int(r), int(c)) for r, c in self.initial)
            bad = [cell for cell in initial if cell in danger or not self.inside(cell)]
            if bad or not initial:
                raise ValueError(f"initial cells must be safe cells inside the grid: {bad}")
            object.__setattr__(self, "initial", initial)
        elif len(danger) == self.rows * self.cols:
            raise ValueError("every cell is dangerous; no initial cell available")

    def inside(self, cell) -> bool:
        return 0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols

    def initial_cells(self) -> tuple:
        if self.initial is not None:
            return self.initial
        return tuple((r, c) for r in range(self.rows) for c in range(self.cols) if (r, c) not in self.danger)


def blocks(*spans) -> frozenset:
    """Cells of inclusive rectangles given as (row_lo, row_hi, col_lo, col_hi)."""
    return frozenset(
        (r, c) for r0, r1, c0, c1 in spans for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)
    )


def arena_8x7() -> GridConfig:
    """8x7 arena with a danger block in the top-left and one in the bottom-right corner."""
    return GridConfig(8, 7, blocks((0, 1, 0, 3), (4, 7, 4, 6)))


def robot_step(x, u, cfg: GridConfig) -> np.ndarray:
    move = int(u[0]) if np.ndim(u) else int(u)
    if move not in _DELTA:
        raise ValueError(f"unknown move {u!r}; expected one of N=0, E=1, S=2, W=3")
    dr, dc = _DELTA[move]
    r = min(max(int(x[0]) + dr, 0), cfg.rows - 1)
    c = min(max(int(x[1]) + dc, 0), cfg.cols - 1)
    return np.array([float(r), float(c)])


def robot_label(x, u, cfg: GridConfig) -> int:
    return int((int(x[0]), int(x[1])) in cfg.danger)


class GridRobot(Plant):
    name = "grid"

    def __init__(self, cfg: GridConfig):
        self.cfg = cfg
        self.n = 2
        self.space = ControlSpace(((NORTH, EAST, SOUTH, WEST),))
        self._initial = cfg.initial_cells()

    def initial_state(self, rng):
        r, c = self._initial[int(rng.integers(len(self._initial)))]
        return np.array([float(r), float(c)])

    def step(self, x, u, rng):
        return robot_step(x, u, self.cfg)

    def label(self, x, u):
        return robot_label(x, u, self.cfg)
