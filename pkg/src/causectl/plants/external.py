"""Plants living in a child process, driven over newline-delimited JSON.

Requests and replies are one JSON object per line on the child's stdin/stdout:

    {"op": "init"}                                   -> {"n": .., "m": .., "control_sets": [[..], ..]}
    {"op": "reset", "seed_draw": s}                  -> {"x": [..]}
    {"op": "step", "x": [..], "u": [..], "seed_draw": s} -> {"x_next": [..]}

``seed_draw`` is a natural number drawn from the caller's plant stream, so
a stochastic child stays reproducible under the caller's seed.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from typing import Sequence

import numpy as np

from ..data import ControlSpace
from ..logic.formula import Formula
from ..logic.semantics import evaluate
from ..logic.trace import Trace
from .base import Plant

SEED_LIMIT = 2**63


class ExternalPlantError(RuntimeError):
    pass


class ProcessExited(ExternalPlantError):
    pass


class MalformedReply(ExternalPlantError):
    pass


class ReplyTimeout(ExternalPlantError):
    pass


class DimensionError(ExternalPlantError):
    pass


def _pump(stream, out: queue.Queue):
    for line in iter(stream.readline, ""):
        out.put(line)
    out.put(None)


class ExternalPlant(Plant):
    """Adapter over a child process speaking the line protocol.

    ``label_formula`` is evaluated on the single sample (x, u); without one,
    every sample is labeled 0.
    """

    name = "external"

    def __init__(self, command: Sequence[str], timeout: float = 10.0, label_formula: Formula | None = None):
        self.command = list(command)
        self.timeout = float(timeout)
        self.label_formula = label_formula
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProcessExited(f"could not start {self.command!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=_pump, args=(self._proc.stdout, self._lines), daemon=True).start()
        reply = self._call({"op": "init"}, ("n", "m", "control_sets"))
        try:
            self.n = int(reply["n"])
            self.space = ControlSpace(tuple(tuple(s) for s in reply["control_sets"]))
        except (TypeError, ValueError) as exc:
            self.close()
            raise MalformedReply(f"bad handshake {reply!r}: {exc}") from exc
        if self.space.m != int(reply["m"]):
            self.close()
            raise DimensionError(f"handshake says m={reply['m']} but lists {self.space.m} control sets")

    def _call(self, request: dict, keys: tuple[str, ...]) -> dict:
        if self._proc.poll() is not None:
            raise ProcessExited(f"plant process exited with code {self._proc.returncode}")
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProcessExited(f"plant process closed its input: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ReplyTimeout(f"no reply to {request['op']!r} within {self.timeout}s") from None
        if line is None:
            code = self._proc.wait(timeout=self.timeout)
            raise ProcessExited(f"plant process exited with code {code} before replying to {request['op']!r}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedReply(f"reply to {request['op']!r} is not JSON: {line.strip()[:80]!r}") from exc
        if not isinstance(reply, dict) or any(k not in reply for k in keys):
            raise MalformedReply(f"reply to {request['op']!r} lacks {keys}: {line.strip()[:80]!r}")
        return reply

    def _vector(self, reply: dict, key: str) -> np.ndarray:
        try:
            v = np.asarray(reply[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise MalformedReply(f"{key} is not a numeric vector: {reply[key]!r}") from exc
        if v.shape != (self.n,):
            raise DimensionError(f"{key} has shape {v.shape}, expected ({self.n},)")
        return v

    def initial_state(self, rng):
        reply = self._call({"op": "reset", "seed_draw": int(rng.integers(SEED_LIMIT))}, ("x",))
        return self._vector(reply, "x")

    def step(self, x, u, rng):
        request = {
            "op": "step",
            "x": [float(v) for v in x],
            "u": [float(v) for v in u],
            "seed_draw": int(rng.integers(SEED_LIMIT)),
        }
        return self._vector(self._call(request, ("x_next",)), "x_next")

    def label(self, x, u):
        if self.label_formula is None:
            return 0
        sample = Trace(np.asarray(x, dtype=float)[None, :], np.asarray(u, dtype=float)[None, :])
        return int(evaluate(self.label_formula, sample, 0))

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
            proc.wait(timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_step(handle: ExternalPlant, x, u, seed_draw: int = 0) -> np.ndarray:
    """One protocol round trip with an explicit seed draw."""
    request = {"op": "step", "x": [float(v) for v in x], "u": [float(v) for v in u], "seed_draw": int(seed_draw)}
    return handle._vector(handle._call(request, ("x_next",)), "x_next")
