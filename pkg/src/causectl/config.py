"""Run configuration files.

A config is an INI file whose values are JSON (bare words are read as strings):

    [run]
    plant = "grid"
    seed = 7

    [grid]
    rows = 8
    danger_blocks = [[0, 1, 0, 3], [4, 7, 4, 6]]

Sections: ``run``, ``search``, ``domain`` and one plant section
(``traffic``, ``grid`` or ``external``).  :func:`dump_config` writes every
field including defaults, so the emitted copy reproduces the run.
"""

from __future__ import annotations

import configparser
import json
import os
import shlex
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from typing import Optional

from .mining import ParameterDomain, SearchParams
from .plants import GridConfig, GridRobot, TrafficConfig, TrafficNetwork, blocks, five_link
from .plants.base import Plant

PLANTS = ("traffic", "grid", "external")
BUILTIN = ("traffic_base", "traffic_congested", "grid_8x7")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Threshold grid step plus time-bound grids; thresholds follow each dataset's range."""

    step: float = 1.0
    bounds: tuple[int, ...] = (1, 2)
    inner_bounds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(int(b) for b in self.bounds))
        object.__setattr__(self, "inner_bounds", tuple(int(b) for b in self.inner_bounds))
        if self.step <= 0:
            raise ConfigError("domain step must be positive")
        if not self.bounds or min(self.bounds) < 1:
            raise ConfigError("domain bounds must be non-empty and at least 1")
        if any(b < 0 for b in self.inner_bounds):
            raise ConfigError("domain inner_bounds must be natural numbers")

    def build(self, data) -> ParameterDomain:
        return ParameterDomain.from_dataset(data, self.step, self.bounds, self.inner_bounds)


@dataclass(frozen=True)
class RunConfig:
    plant: str = "grid"
    plant_params: dict = field(default_factory=dict)
    search: SearchParams = SearchParams()
    domain: DomainSpec = DomainSpec()
    bound: float = 0.0
    traces: int = 20
    length: int = 100
    seed: int = 0
    max_iterations: int = 8
    fallback: str = "uniform"
    out: str = "out"

    def __post_init__(self):
        if self.plant not in PLANTS:
            raise ConfigError(f"unknown plant {self.plant!r}; expected one of {', '.join(PLANTS)}")
        if not 0 <= self.bound <= 1:
            raise ConfigError("bound must lie in [0, 1]")
        if self.traces < 0 or self.length < 1:
            raise ConfigError("traces must be >= 0 and length >= 1")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.fallback not in ("uniform", "min-satisfied"):
            raise ConfigError(f"unknown fallback {self.fallback!r}")
        if self.seed < 0:
            raise ConfigError("seed must be a natural number")


_RUN_KEYS = ("plant", "bound", "traces", "length", "seed", "max_iterations", "fallback", "out")


def _value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _section(parser, name) -> dict:
    if not parser.has_section(name):
        return {}
    return {k: _value(v) for k, v in parser.items(name)}


def _build(cls, values: dict, where: str):
    known = {f.name for f in fields(cls)}
    extra = set(values) - known
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def builtin_path(name: str) -> str:
    return str(resources.files("causectl").joinpath("configs", f"{name}.cfg"))


def load_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Read ``path`` (a file or a builtin config name) and apply non-None overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        if not os.path.exists(path) and path in BUILTIN:
            path = builtin_path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    run = _section(parser, "run")
    extra = set(run) - set(_RUN_KEYS)
    if extra:
        raise ConfigError(f"unknown key(s) in [run]: {', '.join(sorted(extra))}")
    search = _section(parser, "search")
    domain = _section(parser, "domain")
    for key in ("oc_min", "oc_max", "max_clauses", "min_gain", "beta"):
        if overrides.get(key) is not None:
            search[key] = overrides[key]
    for key in _RUN_KEYS:
        if overrides.get(key) is not None:
            run[key] = overrides[key]
    plant = run.get("plant", "grid")
    try:
        return RunConfig(
            plant_params=_section(parser, plant) if plant in PLANTS else {},
            search=_build(SearchParams, search, "search"),
            domain=_build(DomainSpec, domain, "domain"),
            **run,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: RunConfig) -> str:
    """Config text with every field spelled out."""
    lines = ["[run]"]
    for key in _RUN_KEYS:
        lines.append(f"{key} = {json.dumps(getattr(cfg, key))}")
    lines += ["", "[search]"]
    lines += [f"{k} = {json.dumps(v)}" for k, v in asdict(cfg.search).items()]
    lines += ["", "[domain]"]
    lines += [f"{k} = {json.dumps(list(v) if isinstance(v, tuple) else v)}" for k, v in asdict(cfg.domain).items()]
    if cfg.plant_params:
        lines += ["", f"[{cfg.plant}]"]
        lines += [f"{k} = {json.dumps(v)}" for k, v in cfg.plant_params.items()]
    return "\n".join(lines) + "\n"


def traffic_config(params: dict) -> TrafficConfig:
    params = dict(params)
    base = five_link(bool(params.pop("congested", False)))
    if "signals" in params:
        params["signals"] = [{float(k): v for k, v in s.items()} for s in params["signals"]]
    if "edges" in params:
        params["edges"] = [tuple(e) for e in params["edges"]]
    try:
        return replace(base, **params)
    except TypeError as exc:
        raise ConfigError(f"[traffic]: {exc}") from exc


def grid_config(params: dict) -> GridConfig:
    params = dict(params)
    unknown = set(params) - {"rows", "cols", "danger", "danger_blocks", "initial"}
    if unknown:
        raise ConfigError(f"unknown key(s) in [grid]: {', '.join(sorted(unknown))}")
    danger = set(blocks(*params.pop("danger_blocks", [])))
    danger |= {tuple(c) for c in params.pop("danger", [])}
    initial = params.pop("initial", None)
    return GridConfig(
        int(params.get("rows", 8)),
        int(params.get("cols", 7)),
        frozenset(danger),
        tuple(tuple(c) for c in initial) if initial else None,
    )


def build_plant(cfg: RunConfig) -> Plant:
    try:
        if cfg.plant == "traffic":
            return TrafficNetwork(traffic_config(cfg.plant_params))
        if cfg.plant == "grid":
            return GridRobot(grid_config(cfg.plant_params))
        from .logic.parser import parse
        from .plants.external import ExternalPlant

        params = dict(cfg.plant_params)
        command = params.get("command")
        if not command:
            raise ConfigError("[external] needs a command")
        if isinstance(command, str):
            command = shlex.split(command)
        plant = ExternalPlant(command, float(params.get("timeout", 10.0)))
        if params.get("label"):
            plant.label_formula = parse(params["label"], plant.n, plant.m)
        return plant
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{cfg.plant}]: {exc}") from exc
