"""Serve a native plant over the external line protocol on stdin/stdout.

    python -m causectl.plants.serve grid [config.cfg]
    python -m causectl.plants.serve echo N M

``echo`` is a test double whose successor state equals the current state.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from ..data import ControlSpace
from .base import Plant


class EchoPlant(Plant):
    name = "echo"

    def __init__(self, n: int = 1, m: int = 1):
        self.n = n
        self.space = ControlSpace(tuple((0.0, 1.0) for _ in range(m)))

    def initial_state(self, rng):
        return np.zeros(self.n)

    def step(self, x, u, rng):
        return np.asarray(x, dtype=float)

    def label(self, x, u):
        return 0


def serve(plant: Plant, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        op = req.get("op")
        if op == "init":
            reply = {"n": plant.n, "m": plant.m, "control_sets": plant.space.to_list()}
        elif op == "reset":
            x = plant.initial_state(np.random.default_rng(int(req.get("seed_draw", 0))))
            reply = {"x": [float(v) for v in x]}
        elif op == "step":
            rng = np.random.default_rng(int(req.get("seed_draw", 0)))
            x = plant.step(np.asarray(req["x"], dtype=float), np.asarray(req["u"], dtype=float), rng)
            reply = {"x_next": [float(v) for v in x]}
        else:
            reply = {"error": f"unknown op {op!r}"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        print(__doc__, file=sys.stderr)
        return 1
    kind = argv[0]
    if kind == "echo":
        n = int(argv[1]) if len(argv) > 1 else 1
        m = int(argv[2]) if len(argv) > 2 else 1
        plant: Plant = EchoPlant(n, m)
    else:
        from ..config import build_plant, load_config

        cfg = load_config(argv[1] if len(argv) > 1 else None, plant=kind)
        plant = build_plant(cfg)
    return serve(plant)


if __name__ == "__main__":
    sys.exit(main())
