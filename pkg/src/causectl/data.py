"""Control spaces and labeled datasets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .logic.trace import Trace


@dataclass(frozen=True)
class ControlSpace:
    """Per-dimension finite value sets; the control set is their product."""

    sets: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        sets = tuple(tuple(float(v) for v in s) for s in self.sets)
        for j, s in enumerate(sets):
            if not s:
                raise ValueError(f"control dimension {j} has an empty value set")
            if len(set(s)) != len(s):
                raise ValueError(f"control dimension {j} repeats a value: {s}")
        object.__setattr__(self, "sets", sets)

    @property
    def m(self) -> int:
        return len(self.sets)

    def product(self) -> list[tuple[float, ...]]:
        return list(itertools.product(*self.sets))

    @property
    def size(self) -> int:
        return int(np.prod([len(s) for s in self.sets])) if self.sets else 1

    def contains(self, u: Sequence[float]) -> bool:
        return len(u) == self.m and all(float(v) in s for v, s in zip(u, self.sets))

    def to_list(self) -> list[list[float]]:
        return [list(s) for s in self.sets]


@dataclass(frozen=True, eq=False)
class LabeledTrace:
    trace: Trace
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8, copy=True).reshape(-1)
        if len(labels) != len(self.trace):
            raise ValueError(f"{len(labels)} labels for a trace of {len(self.trace)} samples")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.trace)

    def __eq__(self, other):
        if not isinstance(other, LabeledTrace):
            return NotImplemented
        return self.trace == other.trace and np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled traces sharing state/control dimensions and a control space.

    ``meta`` carries provenance (plant id, seed, generator) for dataset files.
    """

    traces: tuple[LabeledTrace, ...]
    n: int
    space: ControlSpace
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        for i, lt in enumerate(self.traces):
            if lt.trace.n != self.n or lt.trace.m != self.m:
                raise ValueError(
                    f"trace {i} has dimensions (n={lt.trace.n}, m={lt.trace.m}), "
                    f"dataset expects (n={self.n}, m={self.m})"
                )

    @property
    def m(self) -> int:
        return self.space.m

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n == other.n
            and self.space == other.space
            and self.meta == other.meta
            and self.traces == other.traces
        )

    __hash__ = None

    @property
    def violations(self) -> int:
        """Number of label-1 samples."""
        return int(sum(int(lt.labels.sum()) for lt in self.traces))

    def violation_rate(self) -> float:
        """Fraction of label-1 samples over indices 1..N of every trace."""
        steps = sum(len(lt) - 1 for lt in self.traces)
        if steps == 0:
            return 0.0
        return sum(int(lt.labels[1:].sum()) for lt in self.traces) / steps
