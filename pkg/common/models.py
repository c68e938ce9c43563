# common/models.py
from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

ManifoldKind = Literal["euclidean", "sphere", "hyperbolic", "custom"]
SCHEMA_VERSION = 1
KNOT_TOL = 1e-9


def _fail(problems: List[str]) -> None:
    # one line per problem, each "<field>: <message>" relative to the model raising it
    if problems:
        raise ValueError("\n".join(problems))


def _loc(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def diagnostics(err: ValidationError, root: str = "") -> List[str]:
    """Flatten a ValidationError into "<loc>: <message>" lines (knots[3], basepoint.frame, ...)."""
    out: List[str] = []
    for e in err.errors():
        loc = _loc(((root,) if root else ()) + tuple(e["loc"]))
        msg = str(e["msg"])
        if e["type"] == "value_error":
            lines = msg.removeprefix("Value error, ").splitlines()
            out += [f"{loc}.{line}" if loc else line for line in lines]
        else:
            out.append(f"{loc}: {msg}" if loc else msg)
    return out


def diagnose(model: Type[BaseModel], payload: Any, root: str = "") -> List[str]:
    """Diagnostics for payload against model; [] means valid."""
    try:
        model.model_validate(payload)
    except ValidationError as e:
        return diagnostics(e, root)
    return []


# -------- files ----------

class ManifoldDescriptor(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    kind: ManifoldKind
    dim: int = Field(..., ge=2)
    chart_radius: Optional[float] = Field(default=None, gt=0)
    curvature_scale: Optional[float] = Field(default=None, gt=0)
    metric: Optional[str] = None                 # registered metric name, custom kind only
    params: Dict[str, float] = {}

    @model_validator(mode="after")
    def _kind_fields(self) -> "ManifoldDescriptor":
        problems = []
        if self.kind == "custom":
            if not self.metric:
                problems.append("metric: required for custom manifolds")
            if self.chart_radius is None:
                problems.append("chart_radius: required for custom manifolds")
        elif self.metric:
            problems.append("metric: only allowed for custom manifolds")
        _fail(problems)
        return self


class BasisPointModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    point: List[float]
    frame: List[List[float]]

    @model_validator(mode="after")
    def _oriented(self) -> "BasisPointModel":
        n = len(self.frame)
        if n == 0 or any(len(r) != n for r in self.frame):
            _fail(["frame: expected a square matrix"])
        if np.linalg.det(np.asarray(self.frame, dtype=float)) <= 0:
            _fail(["frame: determinant must be positive"])
        return self


class JumpModel(BaseModel):
    t: float
    closeness: float                             # inf when a one-sided frame is singular


class CurveFile(BaseModel):
    """Version 1 curve file; cross-field checks report every problem at once."""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    version: Literal[1]
    manifold: ManifoldDescriptor
    duration: float = Field(..., ge=0)
    degree: int = Field(..., ge=1)
    knots: List[float]
    control_points: List[List[float]]
    basepoint: BasisPointModel
    jumps: List[JumpModel] = []

    @model_validator(mode="after")
    def _consistent(self) -> "CurveFile":
        n, k, a = self.manifold.dim, self.degree, self.duration
        knots, cps = self.knots, self.control_points
        problems = []

        if a > 0 and k < n + 2:
            problems.append(f"degree: must be >= dim + 2 = {n + 2}")
        problems += [f"knots[{i}]: not nondecreasing" for i in range(1, len(knots)) if knots[i] < knots[i - 1]]
        if knots:
            if abs(knots[0]) > KNOT_TOL:
                problems.append("knots[0]: expected 0")
            if abs(knots[-1] - a) > KNOT_TOL:
                problems.append(f"knots[{len(knots) - 1}]: expected duration {a}")
        if a > 0 and len(cps) != len(knots) - k - 1:
            problems.append(f"control_points: expected {len(knots) - k - 1} rows, got {len(cps)}")
        problems += [f"control_points[{i}]: expected {n} entries, got {len(r)}" for i, r in enumerate(cps) if len(r) != n]
        if a == 0 and (knots or cps):
            problems.append("duration: 0 is reserved for the neutral curve (no knots, no control points)")

        bp = self.basepoint
        if len(bp.point) != n:
            problems.append(f"basepoint.point: expected {n} entries, got {len(bp.point)}")
        if len(bp.frame) != n:
            problems.append(f"basepoint.frame: expected a {n}x{n} matrix")
        _fail(problems)
        return self


class FrameTable(BaseModel):
    """Rows of a frame CSV: t followed by dim * dim entries."""

    dim: int = Field(..., ge=1)
    rows: List[List[float]]

    @model_validator(mode="after")
    def _shape(self) -> "FrameTable":
        if not self.rows:
            _fail(["no rows"])
        width = 1 + self.dim * self.dim
        problems, prev = [], None
        for i, r in enumerate(self.rows, start=1):
            if len(r) != width:
                problems.append(f"row {i}: expected {width} columns, got {len(r)}")
                continue
            if prev is not None and r[0] < prev:
                problems.append(f"row {i}: t not nondecreasing")
            prev = r[0]
        _fail(problems)
        return self


# -------- reports ----------

class Report(BaseModel):
    schema_version: int = SCHEMA_VERSION
    config: Dict[str, object] = {}


class CheckReport(Report):
    kind: Literal["check"] = "check"
    dim: int
    duration: float
    margin: float
    frame_start: List[List[float]]
    frame_end: List[List[float]]
    in_LM: bool
    in_LMdelta: bool
    delta: float
    failures: List[str] = []
    jumps: List[JumpModel] = []


class WireReport(Report):
    kind: Literal["wire"] = "wire"
    mode: Literal["matrix", "manifold"]
    N: int
    margin: float
    margin_tol: float
    passed: bool
    endpoint_closeness: Optional[List[float]] = None
    loop_class: Optional[int] = None
    profile: List[Dict[str, float]] = []
    asymptotics: List[Dict[str, float]] = []
    output: Optional[str] = None


class MollifyReport(Report):
    kind: Literal["smooth"] = "smooth"
    tau: float
    eps2: float
    kernel: str
    margin_before: float
    margin_after: float
    jumps_removed: int
    endpoint_closeness: List[float]
    output: Optional[str] = None


class SpinReport(Report):
    kind: Literal["spin"] = "spin"
    loop_class: int = Field(..., alias="class")
    residual: float
    samples: int

    model_config = ConfigDict(populate_by_name=True)


class ConcatReport(Report):
    kind: Literal["concat"] = "concat"
    duration: float
    jumps: List[JumpModel] = []
    max_jump: float
    delta: float
    output: Optional[str] = None


class AsymptoticsReport(Report):
    kind: Literal["asymptotics"] = "asymptotics"
    Ns: List[int]
    k_max: int
    monotone: Dict[str, bool]
    rows: List[Dict[str, float]]
    csv: Optional[str] = None


class CensusReport(Report):
    kind: Literal["census"] = "census"
    dim: int
    samples: List[Dict[str, object]]
    classes: Dict[str, int]
    class_count: int
    both_classes: bool


class LocEqualReport(Report):
    kind: Literal["loc_equal"] = "loc_equal"
    equal: bool
    class_a: int
    class_b: int
    class_omega: int
    power_a: int
    power_b: int


class TransferReport(Report):
    kind: Literal["transfer"] = "transfer"
    manifold: str
    lam: float
    scanned: bool                                # lambda found by halving rather than given
    members: List[Dict[str, object]]
    passed: bool
