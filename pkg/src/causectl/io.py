"""Dataset files, result tables and heatmaps.

Dataset files are JSON lines: a header record followed by one record per
trace.  Floats are written in their shortest round-trip decimal form, so
write -> read -> write is byte-identical.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .control import SynthesisRun
from .data import ControlSpace, Dataset, LabeledTrace
from .logic.trace import Trace
from .mining import ClauseScore
from .plants.grid import GridConfig

SCHEMA = "causectl-dataset"
SCHEMA_VERSION = 1


class DatasetFormatError(ValueError):
    """Corrupt or incompatible dataset file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def dataset_text(data: Dataset) -> str:
    header = {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "n": data.n,
        "m": data.m,
        "control_sets": data.space.to_list(),
        "traces": len(data),
        "meta": data.meta,
    }
    lines = [_dumps(header)]
    for i, lt in enumerate(data):
        record = {
            "trace": i,
            "x": lt.trace.states.tolist(),
            "u": lt.trace.controls.tolist(),
            "labels": lt.labels.tolist(),
        }
        lines.append(_dumps(record))
    return "\n".join(lines) + "\n"


def write_dataset(path: str, data: Dataset) -> None:
    atomic_write(path, dataset_text(data))


def _matrix(value, width: int, name: str, line: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise DatasetFormatError(f"{name} is not a numeric matrix", line) from None
    if arr.size == 0:
        arr = arr.reshape(0, width)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise DatasetFormatError(f"{name} has shape {arr.shape}, header declares width {width}", line)
    return arr


def parse_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError("empty file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"header is not JSON ({exc.msg})", 1) from None
    if not isinstance(header, dict) or header.get("schema") != SCHEMA:
        raise DatasetFormatError("not a dataset file (missing schema tag)", 1)
    if header.get("version") != SCHEMA_VERSION:
        raise DatasetFormatError(f"schema version {header.get('version')!r}, expected {SCHEMA_VERSION}", 1)
    try:
        n, m, count = int(header["n"]), int(header["m"]), int(header["traces"])
        space = ControlSpace(tuple(tuple(s) for s in header["control_sets"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"bad header: {exc}", 1) from None
    if space.m != m:
        raise DatasetFormatError(f"header m={m} but {space.m} control sets", 1)
    traces = []
    for i in range(count):
        no = i + 2
        if no > len(lines):
            raise DatasetFormatError(f"missing record for trace {i} of {count} (file truncated)", no)
        try:
            rec = json.loads(lines[no - 1])
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"corrupt record ({exc.msg})", no) from None
        if not isinstance(rec, dict) or any(k not in rec for k in ("x", "u", "labels")):
            raise DatasetFormatError("record lacks x, u or labels", no)
        if rec.get("trace", i) != i:
            raise DatasetFormatError(f"record is trace {rec.get('trace')!r}, expected {i}", no)
        xs = _matrix(rec["x"], n, "x", no)
        us = _matrix(rec["u"], m, "u", no)
        try:
            traces.append(LabeledTrace(Trace(xs, us), rec["labels"]))
        except (TypeError, ValueError) as exc:
            raise DatasetFormatError(str(exc), no) from None
    if any(line.strip() for line in lines[count + 1 :]):
        raise DatasetFormatError(f"unexpected content after {count} trace records", count + 2)
    return Dataset(tuple(traces), n, space, dict(header.get("meta") or {}))


def read_dataset(path: str) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh.read())


def write_formula(path: str, formula) -> None:
    atomic_write(path, f"{formula}\n")


def read_formula_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read().strip()


def _csv(rows: Iterable[Iterable]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


REPORT_HEADER = ("i", "violations", "formula", "tp", "fp")


def report_text(run: SynthesisRun | None) -> str:
    rows = [REPORT_HEADER]
    for r in run.records if run else ():
        blank = lambda v: "" if v is None else v
        rows.append((r.iteration, r.violations, r.formula_text, blank(r.tp), blank(r.fp)))
    return _csv(rows)


def emit_report(run: SynthesisRun | None, path: str) -> None:
    atomic_write(path, report_text(run))


def scores_text(rows: list[ClauseScore]) -> str:
    out = [("formula", "tp", "fp", "tn", "fn", "f_beta")]
    for s in rows:
        c = s.counts
        out.append((s.text, c.tp, c.fp, c.tn, c.fn, repr(float(s.score))))
    return _csv(out)


@dataclass(frozen=True)
class HeatmapReport:
    visits: np.ndarray  # rows x cols counts
    ratios: np.ndarray  # visits / total samples

    @property
    def total(self) -> int:
        return int(self.visits.sum())


def heatmap(data: Dataset, cfg: GridConfig) -> HeatmapReport:
    if data.n != 2 or data.meta.get("plant", "grid") != "grid":
        raise ValueError(f"heatmaps need a grid-robot dataset (got n={data.n}, plant={data.meta.get('plant')!r})")
    visits = np.zeros((cfg.rows, cfg.cols), dtype=np.int64)
    for lt in data:
        cells = lt.trace.states.astype(int)
        if len(cells) and not ((cells >= 0).all() and (cells[:, 0] < cfg.rows).all() and (cells[:, 1] < cfg.cols).all()):
            raise ValueError("dataset visits cells outside the configured grid")
        np.add.at(visits, (cells[:, 0], cells[:, 1]), 1)
    total = visits.sum()
    ratios = visits / total if total else np.zeros(visits.shape)
    return HeatmapReport(visits, ratios)


def heatmap_csv(report: HeatmapReport) -> str:
    rows = [("row", "col", "visits", "ratio")]
    for (r, c), v in np.ndenumerate(report.visits):
        rows.append((r, c, int(v), repr(float(report.ratios[r, c]))))
    return _csv(rows)


def heatmap_svg(report: HeatmapReport, cfg: GridConfig, cell: int = 40) -> str:
    rows, cols = report.ratios.shape
    peak = float(report.ratios.max()) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * cell}" height="{rows * cell}" '
        f'viewBox="0 0 {cols * cell} {rows * cell}">'
    ]
    for (r, c), ratio in np.ndenumerate(report.ratios):
        shade = 255 - int(round(215 * float(ratio) / peak))
        stroke = "#c00000" if (r, c) in cfg.danger else "#808080"
        width = 3 if (r, c) in cfg.danger else 1
        parts.append(
            f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
            f'fill="rgb({shade},{shade},{shade})" stroke="{stroke}" stroke-width="{width}">'
            f"<title>({r},{c}) {float(ratio):.4f}</title></rect>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_heatmap(data: Dataset, cfg: GridConfig, path: str) -> HeatmapReport:
    """Write ``<path>.svg`` and ``<path>.csv``; ``path`` may carry either suffix or none."""
    report = heatmap(data, cfg)
    stem = os.path.splitext(path)[0] if path.endswith((".svg", ".csv")) else path
    atomic_write(stem + ".svg", heatmap_svg(report, cfg))
    atomic_write(stem + ".csv", heatmap_csv(report))
    return report
