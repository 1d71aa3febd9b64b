"""Command-line entry point: ``causectl <command> [options]``.

Exit status is 0 on success, 1 for usage errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import io as dio
from . import rng as rngs
from .config import ConfigError, RunConfig, build_plant, dump_config, grid_config, load_config
from .control import run_closed_loop, simulate_random, synthesize_iterative
from .mining import CombinedCause, confusion_counts, f_beta, formula_search, score_report
from .logic.parser import FormulaSyntaxError, parse
from .plants.external import ExternalPlantError

log = logging.getLogger("causectl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _run_flags(p: argparse.ArgumentParser, out_help: str):
    p.add_argument("--config", help="config file or builtin name (traffic_base, traffic_congested, grid_8x7)")
    p.add_argument("--plant", choices=("traffic", "grid", "external"))
    p.add_argument("--seed", type=int)
    p.add_argument("--traces", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--out", help=out_help)


def _search_flags(p: argparse.ArgumentParser):
    p.add_argument("--oc-min", type=int)
    p.add_argument("--oc-max", type=int)
    p.add_argument("--max-causes", type=int, help="clauses mined per search")
    p.add_argument("--min-gain", type=float)
    p.add_argument("--beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causectl", description="Mine controllable causes of unwanted events and avoid them.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="random-control traces to a dataset file")
    _run_flags(p, "dataset path (default out/dataset.jsonl)")

    p = sub.add_parser("mine", help="mine a cause formula from a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    _search_flags(p)
    p.add_argument("--out", help="formula path (default out/cause.ptstl); scores go next to it")

    p = sub.add_parser("control", help="closed-loop traces avoiding a cause formula")
    p.add_argument("--formula", required=True)
    _run_flags(p, "dataset path (default out/closed_loop.jsonl)")

    p = sub.add_parser("synthesize", help="iterate mining and closed-loop simulation")
    _run_flags(p, "output directory (default out)")
    _search_flags(p)
    p.add_argument("--bound", type=float, help="stop once the violation rate is at most this")
    p.add_argument("--max-iterations", type=int)

    p = sub.add_parser("eval", help="confusion counts and F-beta of a formula on a dataset")
    p.add_argument("--formula", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--beta", type=float, default=1.0)

    p = sub.add_parser("heatmap", help="per-cell visit ratios of a grid dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", help="output stem (default out/heatmap) for .svg and .csv")
    return parser


def _config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in ("plant", "seed", "traces", "length", "bound", "max_iterations")}
    overrides.update(
        oc_min=getattr(args, "oc_min", None),
        oc_max=getattr(args, "oc_max", None),
        max_clauses=getattr(args, "max_causes", None),
        min_gain=getattr(args, "min_gain", None),
        beta=getattr(args, "beta", None),
    )
    return load_config(getattr(args, "config", None), **overrides)


def _out(args, default: str) -> str:
    return args.out or default


def cmd_simulate(args) -> int:
    cfg = _config(args)
    plant = build_plant(cfg)
    try:
        data = simulate_random(plant, None, cfg.traces, cfg.length, rngs.derive_seed(cfg.seed, "dataset", 0))
    finally:
        plant.close()
    path = _out(args, os.path.join(cfg.out, "dataset.jsonl"))
    dio.write_dataset(path, data)
    print(f"{data.violations} violations in {len(data)} traces -> {path}")
    return 0


def cmd_mine(args) -> int:
    cfg = _config(args)
    data = dio.read_dataset(args.data)
    cause = formula_search(cfg.search, data, cfg.domain.build(data))
    path = _out(args, os.path.join(cfg.out, "cause.ptstl"))
    dio.write_formula(path, cause)
    rows = score_report(cause, data, cfg.search.beta)
    dio.atomic_write(os.path.splitext(path)[0] + "_scores.csv", dio.scores_text(rows))
    print(cause)
    print(dio.scores_text(rows), end="")
    return 0


def cmd_control(args) -> int:
    cfg = _config(args)
    plant = build_plant(cfg)
    try:
        cause = CombinedCause.from_formula(parse(dio.read_formula_text(args.formula), plant.n, plant.m))
        data = run_closed_loop(
            plant, None, cause, cfg.traces, cfg.length, rngs.derive_seed(cfg.seed, "control", 0), cfg.fallback
        )
    finally:
        plant.close()
    path = _out(args, os.path.join(cfg.out, "closed_loop.jsonl"))
    dio.write_dataset(path, data)
    print(f"{data.violations} violations in {len(data)} traces -> {path}")
    return 0


def cmd_synthesize(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg.out)
    plant = build_plant(cfg)
    try:
        cause, run = synthesize_iterative(
            plant,
            None,
            cfg.search,
            cfg.domain.build,
            cfg.bound,
            cfg.traces,
            cfg.length,
            cfg.seed,
            cfg.max_iterations,
            keep_datasets=True,
            fallback=cfg.fallback,
        )
    finally:
        plant.close()
    dio.atomic_write(os.path.join(out, "config.cfg"), dump_config(cfg))
    for i, data in enumerate(run.datasets):
        dio.write_dataset(os.path.join(out, f"dataset_{i}.jsonl"), data)
    dio.write_formula(os.path.join(out, "cause.ptstl"), cause)
    dio.emit_report(run, os.path.join(out, "report.csv"))
    if cfg.plant == "grid" and run.datasets:
        dio.emit_heatmap(run.datasets[-1], grid_config(cfg.plant_params), os.path.join(out, "heatmap"))
    print(dio.report_text(run), end="")
    print(f"status: {run.status}")
    print(f"cause: {cause}")
    return 0


def cmd_eval(args) -> int:
    data = dio.read_dataset(args.data)
    phi = parse(dio.read_formula_text(args.formula), data.n, data.m)
    c = confusion_counts(phi, data)
    print(f"tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn} f_beta={f_beta(c, args.beta)!r}")
    return 0


def cmd_heatmap(args) -> int:
    cfg = load_config(args.config, plant="grid")
    data = dio.read_dataset(args.data)
    stem = _out(args, os.path.join(cfg.out, "heatmap"))
    report = dio.emit_heatmap(data, grid_config(cfg.plant_params), stem)
    print(f"{report.total} samples -> {stem}.svg, {stem}.csv")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "mine": cmd_mine,
    "control": cmd_control,
    "synthesize": cmd_synthesize,
    "eval": cmd_eval,
    "heatmap": cmd_heatmap,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FormulaSyntaxError, dio.DatasetFormatError, ExternalPlantError, ValueError, OSError) as exc:
        print(f"causectl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
