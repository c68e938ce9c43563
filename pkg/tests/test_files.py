# tests/test_files.py
import csv
import json

import numpy as np
import pytest

from common.errors import CurveFileError
from common.files import (
    dumps_report,
    load_curve_payload,
    load_frame_csv,
    save_frame_csv,
    save_rows_csv,
    write_json_atomic,
)
from common.models import CurveFile
from geometry.curve import concat, from_payload, load_curve, save_curve, to_payload
from geometry.manifold import ChartedManifold
from tests.shapes import FIXTURES, circle


def test_reports_are_byte_stable(tmp_path):
    a = write_json_atomic(tmp_path / "a.json", {"b": 1, "a": [1.5, 2]})
    b = write_json_atomic(tmp_path / "b.json", {"a": [1.5, 2], "b": 1})
    ta = (tmp_path / "a.json").read_bytes()
    assert ta == (tmp_path / "b.json").read_bytes()
    assert ta.decode().index('"a"') < ta.decode().index('"b"')
    assert dumps_report({"x": 1}).endswith("\n")
    assert a.endswith("a.json") and b.endswith("b.json")
    assert list(tmp_path.glob(".*")) == []


def test_rows_csv_column_order(tmp_path):
    out = tmp_path / "rows.csv"
    save_rows_csv([{"N": 2, "k": 1, "deviation": 0.5}, {"N": 4, "k": 1, "deviation": 0.25}], out,
                  columns=["N", "k", "deviation"])
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["N", "k", "deviation"]
    assert rows[2] == ["4", "1", "0.25"]


def test_frame_csv(tmp_path):
    out = tmp_path / "loop.csv"
    th = np.linspace(0.0, np.pi, 5)
    frames = np.zeros((5, 2, 2))
    frames[:, 0, 0], frames[:, 0, 1] = np.cos(th), -np.sin(th)
    frames[:, 1, 0], frames[:, 1, 1] = np.sin(th), np.cos(th)
    save_frame_csv(th / np.pi, frames, out)

    times, back = load_frame_csv(out)
    assert np.array_equal(times, th / np.pi)
    assert np.array_equal(back, frames)
    assert out.read_text().splitlines()[0] == "t,F00,F01,F10,F11"


def test_frame_csv_diagnostics(tmp_path):
    out = tmp_path / "bad.csv"
    out.write_text("t,F00,F01,F10\n0,1,0,0\n")
    with pytest.raises(CurveFileError) as e:
        load_frame_csv(out)
    assert e.value.diagnostics == ["header: 3 entries is not a square"]


def test_corrupted_curve_file():
    with pytest.raises(CurveFileError) as e:
        load_curve_payload(FIXTURES / "corrupted.json")
    assert e.value.exit_code == 3
    assert e.value.diagnostics[0].startswith("line 6 column")


def test_invalid_curve_file(tmp_path):
    p = json.loads((FIXTURES / "segment.json").read_text())
    p["control_points"] = p["control_points"][:3]
    out = tmp_path / "short.json"
    out.write_text(json.dumps(p))
    with pytest.raises(CurveFileError) as e:
        load_curve_payload(out)
    assert "control_points: expected 6 rows, got 3" in e.value.diagnostics


def test_frame_rows_out_of_order(tmp_path):
    out = tmp_path / "order.csv"
    out.write_text("t,F00,F01,F10,F11\n0.5,1,0,0,1\n0.25,1,0,0,1\n")
    with pytest.raises(CurveFileError) as e:
        load_frame_csv(out)
    assert e.value.diagnostics == ["row 2: t not nondecreasing"]


def test_loaded_payload_is_normalized():
    payload = load_curve_payload(FIXTURES / "segment.json")
    assert payload["version"] == 1
    assert all(isinstance(x, float) for x in payload["knots"])
    assert "metric" not in payload["manifold"]


# ---------- curve files <-> Moore paths ----------

def test_segment_fixture_maps_to_a_path():
    gamma = load_curve(FIXTURES / "segment.json")
    assert gamma.dim == 2 and gamma.degree == 5
    assert gamma.duration == pytest.approx(1.0)
    assert len(gamma.segments) == 1
    assert np.allclose(gamma(np.array([0.0, 0.5, 1.0])), [[0, 0], [0.5, 0], [1, 0]])
    assert gamma.manifold == ChartedManifold.euclidean(2)


def test_payload_matches_schema(tmp_path):
    gamma = circle(ChartedManifold.euclidean(2))
    out = tmp_path / "circle.json"
    save_curve(gamma, out)
    model = CurveFile.model_validate(json.loads(out.read_text()))
    assert model.degree == 5 and model.manifold.kind == "euclidean"
    assert len(model.control_points) == len(model.knots) - model.degree - 1


def test_joints_survive_the_file(tmp_path):
    M = ChartedManifold.euclidean(2)
    c = circle(M)
    both = concat(c, c)
    payload = to_payload(both)
    k = both.degree
    assert payload["knots"].count(1.0) == k + 1

    back = from_payload(json.loads(json.dumps(payload)))
    assert len(back.segments) == 2
    assert back.duration == pytest.approx(2.0)
    t = np.linspace(0.0, 2.0, 41)
    assert np.allclose(back(t), both(t), atol=1e-12)
    assert back.jumps == both.jumps


def test_multiplicity_too_high():
    payload = to_payload(circle(ChartedManifold.euclidean(2)))
    k = payload["degree"]
    payload["knots"] = payload["knots"][: k + 1] + [0.5] * (k + 2) + payload["knots"][-(k + 1):]
    payload["control_points"] = [[0.0, 0.0]] * (len(payload["knots"]) - k - 1)
    with pytest.raises(CurveFileError):
        from_payload(payload)
