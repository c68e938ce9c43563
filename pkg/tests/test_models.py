# tests/test_models.py
import copy
import json

import pytest
from pydantic import ValidationError

from common.models import CurveFile, FrameTable, ManifoldDescriptor, SpinReport, diagnose, diagnostics
from tests.shapes import FIXTURES


def _segment() -> dict:
    return json.loads((FIXTURES / "segment.json").read_text())


def test_segment_fixture_is_valid():
    assert diagnose(CurveFile, _segment()) == []


def test_knots_must_be_nondecreasing():
    p = _segment()
    p["knots"][7] = 0.5
    p["knots"][8] = 0.2
    assert "knots[8]: not nondecreasing" in diagnose(CurveFile, p)


def test_control_point_count():
    p = _segment()
    p["control_points"].pop()
    assert "control_points: expected 6 rows, got 5" in diagnose(CurveFile, p)


def test_degree_too_small_for_dimension():
    p = _segment()
    p["manifold"]["dim"] = 3
    p["degree"] = 4
    assert "degree: must be >= dim + 2 = 5" in diagnose(CurveFile, p)


def test_basepoint_orientation():
    p = _segment()
    p["basepoint"]["frame"] = [[0.0, 1.0], [1.0, 0.0]]
    assert "basepoint.frame: determinant must be positive" in diagnose(CurveFile, p)


def test_clamped_to_duration():
    p = _segment()
    p["duration"] = 2.0
    assert "knots[11]: expected duration 2.0" in diagnose(CurveFile, p)


def test_collects_several_diagnostics():
    p = copy.deepcopy(_segment())
    p["version"] = 7
    p["jumps"] = [{"t": "x"}]
    errs = diagnose(CurveFile, p)
    assert any(e.startswith("version:") for e in errs)
    assert any(e.startswith("jumps[0].t:") for e in errs)
    assert any(e.startswith("jumps[0].closeness:") for e in errs)


def test_nonfinite_entries_are_rejected():
    p = _segment()
    p["control_points"][2][0] = float("nan")
    assert any(e.startswith("control_points[2][0]:") for e in diagnose(CurveFile, p))


def test_manifold_descriptor():
    assert diagnose(ManifoldDescriptor, {"kind": "sphere", "dim": 2}, "manifold") == []
    errs = diagnose(ManifoldDescriptor, {"kind": "custom", "dim": 2}, "manifold")
    assert errs == [
        "manifold.metric: required for custom manifolds",
        "manifold.chart_radius: required for custom manifolds",
    ]
    errs = diagnose(ManifoldDescriptor, {"kind": "sphere", "dim": 2, "colour": "red"}, "manifold")
    assert [e.split(":")[0] for e in errs] == ["manifold.colour"]
    errs = diagnose(ManifoldDescriptor, {"kind": "torus", "dim": 1}, "manifold")
    assert [e.split(":")[0] for e in errs] == ["manifold.kind", "manifold.dim"]
    assert diagnose(ManifoldDescriptor, {"kind": "sphere", "dim": 2, "metric": "x"}) == [
        "metric: only allowed for custom manifolds",
    ]


def test_frame_table():
    assert diagnose(FrameTable, {"dim": 2, "rows": [[0.0, 1, 0, 0, 1], [1.0, 1, 0, 0, 1]]}) == []
    assert diagnose(FrameTable, {"dim": 2, "rows": [[0.0, 1, 0]]}) == ["row 1: expected 5 columns, got 3"]
    assert diagnose(FrameTable, {"dim": 2, "rows": [[1.0, 1, 0, 0, 1], [0.5, 1, 0, 0, 1]]}) == ["row 2: t not nondecreasing"]
    assert diagnose(FrameTable, {"dim": 2, "rows": []}) == ["no rows"]


def test_diagnostics_carry_the_location():
    p = _segment()
    p["basepoint"]["point"] = ["a", 0.0]
    with pytest.raises(ValidationError) as e:
        CurveFile.model_validate(p)
    assert diagnostics(e.value)[0].startswith("basepoint.point[0]:")


def test_spin_report_uses_the_class_alias():
    r = SpinReport(loop_class=-1, residual=0.0, samples=8)
    assert r.model_dump(by_alias=True)["class"] == -1
