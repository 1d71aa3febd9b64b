import csv
import json

import numpy as np
import pytest

from causectl import io as dio
from causectl.control import IterationRecord, SynthesisRun, simulate_random
from causectl.data import ControlSpace, Dataset, LabeledTrace
from causectl.logic import Trace, parse
from causectl.mining import CauseClause
from causectl.logic import StateAtom
from causectl.plants import GridConfig, GridRobot, TrafficNetwork, arena_8x7, five_link


@pytest.fixture
def traffic_data():
    return simulate_random(TrafficNetwork(five_link()), None, 3, 20, 1)


def test_round_trip_is_lossless(tmp_path, traffic_data):
    path = tmp_path / "d.jsonl"
    dio.write_dataset(str(path), traffic_data)
    back = dio.read_dataset(str(path))
    assert back == traffic_data
    first = path.read_bytes()
    dio.write_dataset(str(path), back)
    assert path.read_bytes() == first


def test_header_is_self_describing(tmp_path, traffic_data):
    path = tmp_path / "d.jsonl"
    dio.write_dataset(str(path), traffic_data)
    header = json.loads(path.read_text().splitlines()[0])
    assert header["n"] == 5 and header["m"] == 2
    assert header["control_sets"] == [[0.0, 1.0], [0.0, 1.0]]
    assert header["meta"]["plant"] == "traffic" and header["meta"]["generator"] == "random"


def test_truncated_file_names_the_line(tmp_path, traffic_data):
    text = dio.dataset_text(traffic_data)
    lines = text.splitlines()
    with pytest.raises(dio.DatasetFormatError) as info:
        dio.parse_dataset("\n".join(lines[:3]) + "\n")
    assert info.value.line == 4
    with pytest.raises(dio.DatasetFormatError) as info:
        dio.parse_dataset("\n".join(lines[:2] + [lines[2][:40]]))
    assert info.value.line == 3 and "line 3" in str(info.value)


def test_schema_errors(traffic_data):
    lines = dio.dataset_text(traffic_data).splitlines()
    header = json.loads(lines[0])
    for change in ({"version": 99}, {"n": 4}, {"schema": "other"}):
        bad = dict(header, **change)
        with pytest.raises(dio.DatasetFormatError):
            dio.parse_dataset("\n".join([json.dumps(bad)] + lines[1:]))
    with pytest.raises(dio.DatasetFormatError):
        dio.parse_dataset("")
    with pytest.raises(dio.DatasetFormatError):
        dio.parse_dataset("\n".join(lines + [lines[1]]))


def test_floats_use_shortest_repr(tmp_path):
    tr = Trace(np.array([[0.1, 1 / 3]]), np.array([[1.0]]))
    data = Dataset((LabeledTrace(tr, [1]),), 2, ControlSpace(((0.0, 1.0),)))
    text = dio.dataset_text(data)
    assert "[[0.1,0.3333333333333333]]" in text
    assert dio.parse_dataset(text) == data


def test_atomic_write_leaves_no_temp(tmp_path):
    dio.atomic_write(str(tmp_path / "sub" / "a.txt"), "hi\n")
    assert sorted(p.name for p in (tmp_path / "sub").iterdir()) == ["a.txt"]


def test_report_csv(tmp_path):
    path = tmp_path / "r.csv"
    dio.emit_report(SynthesisRun(0.0), str(path))
    assert path.read_text() == "i,violations,formula,tp,fp\n"
    clause = CauseClause(0, 1.0, 2, StateAtom(0, ">", 20.0))
    run = SynthesisRun(0.0, [IterationRecord(1, 900, 0.45, (clause,), 405, 0), IterationRecord(2, 10, 0.005)])
    dio.emit_report(run, str(path))
    rows = list(csv.reader(path.open()))
    assert rows[1] == ["1", "900", "((G-[1,2] u0 = 1) & (F-[1,1] x0 > 20))", "405", "0"]
    assert rows[2] == ["2", "10", "", "", ""]
    assert parse(rows[1][2], 1, 1) == clause.formula


def test_heatmap_single_cell(tmp_path):
    cfg = GridConfig(2, 3)
    tr = Trace(np.tile([1.0, 2.0], (10, 1)), np.zeros((10, 1)))
    data = Dataset((LabeledTrace(tr, np.zeros(10)),), 2, ControlSpace(((0.0, 1.0, 2.0, 3.0),)), {"plant": "grid"})
    rep = dio.emit_heatmap(data, cfg, str(tmp_path / "h"))
    assert rep.ratios[1, 2] == 1.0 and rep.ratios.sum() == 1.0
    assert (tmp_path / "h.svg").read_text().startswith("<svg")
    rows = list(csv.DictReader((tmp_path / "h.csv").open()))
    assert len(rows) == 6 and float(rows[5]["ratio"]) == 1.0


def test_heatmap_two_cell_walk():
    cfg = GridConfig(1, 2)
    data = simulate_random(GridRobot(cfg), None, 1, 20_000, 3)
    rep = dio.heatmap(data, cfg)
    assert abs(rep.ratios[0, 0] - 0.5) <= 0.05
    assert rep.ratios.sum() == pytest.approx(1.0, abs=1e-9)


def test_heatmap_sums_to_one_and_rejects_non_grid(traffic_data):
    data = simulate_random(GridRobot(arena_8x7()), None, 4, 50, 0)
    assert dio.heatmap(data, arena_8x7()).ratios.sum() == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        dio.heatmap(traffic_data, arena_8x7())
