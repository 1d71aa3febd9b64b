"""Signalized traffic network modeled as finite link queues.

Per step, an actuated link l sends

    f_l = min(c_l, x_l, min over edges l->k of alpha_lk * (cap_k - x_k) / beta_lk)

vehicles downstream, of which a fraction beta_lk enters link k and the rest
leaves the network.  Each source link receives exogenous inflow
w_l ~ U[0, d_l].  Occupancies are clamped to [0, cap_l].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import ControlSpace
from .base import Plant


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    turn: float  # beta: fraction of the source outflow routed to target
    supply: float = 1.0  # alpha: share of target's free space available to source

    def __post_init__(self):
        if not 0 < self.turn <= 1:
            raise ValueError(f"turn ratio for {self.source}->{self.target} must be in (0,1]")
        if not 0 < self.supply <= 1:
            raise ValueError(f"supply ratio for {self.source}->{self.target} must be in (0,1]")


@dataclass(frozen=True)
class TrafficConfig:
    capacity: tuple[float, ...]
    saturation: tuple[float, ...]
    inflow: tuple[float, ...]
    edges: tuple[Edge, ...]
    # signals[s][value] -> links actuated when u^s == value
    signals: tuple[dict, ...] = field(default_factory=tuple)
    # label 1 when any link reaches its threshold
    label_thresholds: tuple[float, ...] = ()

    def __post_init__(self):
        L = len(self.capacity)
        object.__setattr__(self, "capacity", tuple(float(v) for v in self.capacity))
        object.__setattr__(self, "saturation", tuple(float(v) for v in self.saturation))
        object.__setattr__(self, "inflow", tuple(float(v) for v in self.inflow))
        object.__setattr__(self, "edges", tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges))
        sigs = tuple({float(k): tuple(int(l) for l in v) for k, v in s.items()} for s in self.signals)
        object.__setattr__(self, "signals", sigs)
        if not self.label_thresholds:
            object.__setattr__(self, "label_thresholds", tuple(0.75 * c for c in self.capacity))
        object.__setattr__(self, "label_thresholds", tuple(float(v) for v in self.label_thresholds))
        for name in ("saturation", "inflow", "label_thresholds"):
            if len(getattr(self, name)) != L:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries for {L} links")
        if any(c <= 0 for c in self.capacity):
            raise ValueError("link capacities must be positive")
        if any(d < 0 for d in self.inflow):
            raise ValueError("inflow bounds must be non-negative")
        out_share = [0.0] * L
        for e in self.edges:
            if not (0 <= e.source < L and 0 <= e.target < L):
                raise ValueError(f"edge {e.source}->{e.target} references a missing link")
            out_share[e.source] += e.turn
        for l, s in enumerate(out_share):
            if s > 1 + 1e-12:
                raise ValueError(f"turn ratios leaving link {l} sum to {s} > 1")
        for s, mapping in enumerate(sigs):
            for links in mapping.values():
                for l in links:
                    if not 0 <= l < L:
                        raise ValueError(f"signal {s} references missing link {l}")

    @property
    def links(self) -> int:
        return len(self.capacity)

    @property
    def space(self) -> ControlSpace:
        return ControlSpace(tuple(tuple(sorted(s)) for s in self.signals))

    def actuated(self, u) -> np.ndarray:
        """Links whose outflow movement has green under control ``u``."""
        on = np.ones(self.links, dtype=bool)
        for s, mapping in enumerate(self.signals):
            for value, links in mapping.items():
                if float(u[s]) != value:
                    on[list(links)] = False
        return on


def five_link(congested: bool = False) -> TrafficConfig:
    """Two-signal, five-link network; congested variant doubles inflow on link 0."""
    return TrafficConfig(
        capacity=(40, 40, 40, 20, 20),
        saturation=(20, 20, 20, 10, 10),
        inflow=(10 if congested else 5, 0, 0, 5, 5),
        edges=(Edge(0, 1, 0.75), Edge(1, 2, 0.75), Edge(2, 3, 0.75), Edge(3, 1, 0.3), Edge(4, 2, 0.3)),
        signals=({0: (0,), 1: (3,)}, {0: (1,), 1: (4,)}),
        label_thresholds=(30, 30, 30, 15, 15),
    )


def traffic_flow(x, u, cfg: TrafficConfig) -> np.ndarray:
    """Vehicles leaving each link during one step."""
    x = np.asarray(x, dtype=float)
    cap = np.asarray(cfg.capacity)
    if x.shape != (cfg.links,):
        raise ValueError(f"state has shape {x.shape}, expected ({cfg.links},)")
    if len(u) != len(cfg.signals):
        raise ValueError(f"control has {len(u)} entries, expected {len(cfg.signals)}")
    if (x < 0).any() or (x > cap).any():
        raise ValueError(f"state {x.tolist()} outside [0, capacity]")
    flow = np.minimum(np.asarray(cfg.saturation), x)
    for e in cfg.edges:
        room = e.supply * (cap[e.target] - x[e.target]) / e.turn
        flow[e.source] = min(flow[e.source], room)
    flow[~cfg.actuated(u)] = 0.0
    return flow


def traffic_step(x, u, cfg: TrafficConfig, w) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    flow = traffic_flow(x, u, cfg)
    nxt = x - flow + np.asarray(w, dtype=float)
    for e in cfg.edges:
        nxt[e.target] += e.turn * flow[e.source]
    return np.clip(nxt, 0.0, np.asarray(cfg.capacity))


def traffic_label(x, u=None, cfg: TrafficConfig | None = None) -> int:
    """1 when any link is at or above its congestion threshold."""
    thresholds = (cfg or five_link()).label_thresholds
    return int(any(float(v) >= t for v, t in zip(x, thresholds)))


class TrafficNetwork(Plant):
    name = "traffic"

    def __init__(self, cfg: TrafficConfig):
        self.cfg = cfg
        self.n = cfg.links
        self.space = cfg.space
        self._sources = [l for l, d in enumerate(cfg.inflow) if d > 0]

    def initial_state(self, rng):
        return rng.uniform(0.0, np.asarray(self.cfg.capacity))

    def noise(self, rng) -> np.ndarray:
        w = np.zeros(self.n)
        for l in self._sources:
            w[l] = rng.uniform(0.0, self.cfg.inflow[l])
        return w

    def step(self, x, u, rng):
        return traffic_step(x, u, self.cfg, self.noise(rng))

    def label(self, x, u):
        return traffic_label(x, u, self.cfg)
