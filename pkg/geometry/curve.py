# geometry/curve.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import BSpline, make_interp_spline

from common.errors import (
    ArgumentError,
    CurveFileError,
    DegeneracyError,
    JumpError,
    MismatchError,
    PreconditionError,
    SmoothnessError,
)
from common.files import load_curve_payload, write_json_atomic
from common.logs import get_logger
from common.settings import get_settings
from geometry.manifold import BasisPoint, ChartedManifold

log = get_logger("curve")

JOINT_TOL = 1e-9        # endpoint match and "no jump" threshold
NORM_FLOOR = 1e-12      # g-norm below which a column counts as vanishing
C1_TOL = 1e-6


def degree_for(n: int) -> int:
    """Odd spline degree 2n + 1 used for every constructed path."""
    return 2 * n + 1


# ---------------------------- splines ----------------------------

def fit_spline(times: np.ndarray, points: np.ndarray, degree: int,
               jets: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> BSpline:
    """
    Interpolating spline through (times, points).
    jets = (start, end), each of shape (m, n) holding derivatives 1..m; m = (degree - 1) // 2.
    Without jets the not-a-knot condition is used.
    """
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if jets is None:
        return make_interp_spline(times, points, k=degree)
    j0, j1 = (np.asarray(j, dtype=float) for j in jets)
    if len(j0) != (degree - 1) // 2 or len(j1) != (degree - 1) // 2:
        raise ArgumentError(f"degree {degree} needs {(degree - 1) // 2} jet orders per end")
    bc = ([(j + 1, j0[j]) for j in range(len(j0))], [(j + 1, j1[j]) for j in range(len(j1))])
    return make_interp_spline(times, points, k=degree, bc_type=bc)


def periodic_jets(times: np.ndarray, points: np.ndarray, degree: int) -> np.ndarray:
    """Seam jet (derivatives 1..m) of the periodic interpolant; used only as an estimator."""
    y = np.array(points, dtype=float)
    y[-1] = y[0]
    spl = make_interp_spline(np.asarray(times, dtype=float), y, k=degree, bc_type="periodic")
    return np.stack([spl(times[0], j) for j in range(1, (degree - 1) // 2 + 1)])


def _restrict_spline(spl: BSpline, u0: float, u1: float) -> BSpline:
    """Exact restriction to [u0, u1], re-based to start at 0 (interpolation at Greville points)."""
    k = spl.k
    inner = spl.t[(spl.t > u0 + 1e-12) & (spl.t < u1 - 1e-12)]
    knots = np.r_[[u0] * (k + 1), inner, [u1] * (k + 1)] - u0
    grev = np.array([knots[i + 1:i + k + 1].mean() for i in range(len(knots) - k - 1)])
    # averaging can round past the clamped ends
    grev = np.clip(grev, 0.0, u1 - u0)
    grev[0], grev[-1] = 0.0, u1 - u0
    return make_interp_spline(grev, spl(grev + u0), k=k, t=knots)


# ---------------------------- types ----------------------------

@dataclass(frozen=True, eq=False)
class Segment:
    """One smooth piece, stored in local time [0, duration] and placed at offset."""

    offset: float
    duration: float
    spline: BSpline
    density: float = 0.0                          # minimum samples per unit time for this piece
    cache: dict = field(default_factory=dict, repr=False)

    def shifted(self, offset: float) -> "Segment":
        return Segment(offset, self.duration, self.spline, self.density, self.cache)


@dataclass(frozen=True, eq=False)
class MoorePath:
    """
    Piecewise spline curve of duration a in one chart.

    Segments meet C^0 (and C^1 for members of L M(delta)); frame jumps at joints
    are recorded as (time, closeness). No segments means the neutral curve of duration 0.
    """

    manifold: ChartedManifold
    basepoint: BasisPoint
    degree: int
    segments: Tuple[Segment, ...] = ()
    jumps: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def neutral(cls, M: ChartedManifold, basepoint: Optional[BasisPoint] = None,
                degree: Optional[int] = None) -> "MoorePath":
        return cls(M, basepoint or BasisPoint.origin(M.dim), degree or degree_for(M.dim))

    @property
    def dim(self) -> int:
        return self.manifold.dim

    @property
    def is_neutral(self) -> bool:
        return not self.segments

    @property
    def duration(self) -> float:
        if not self.segments:
            return 0.0
        last = self.segments[-1]
        return last.offset + last.duration

    @property
    def joints(self) -> List[float]:
        return [s.offset for s in self.segments[1:]]

    @property
    def max_jump(self) -> float:
        return max((c for _, c in self.jumps), default=0.0)

    def _locate(self, t: np.ndarray, side: str) -> np.ndarray:
        offs = np.array([s.offset for s in self.segments])
        return np.clip(np.searchsorted(offs, t, side=side) - 1, 0, len(self.segments) - 1)

    def evaluate(self, t, nu: int = 0, side: str = "right") -> np.ndarray:
        if self.is_neutral:
            raise ArgumentError("the neutral curve has no points")
        t = np.asarray(t, dtype=float)
        tt = np.atleast_1d(t)
        idx = self._locate(tt, side)
        out = np.empty(tt.shape + (self.dim,))
        for i in np.unique(idx):
            m = idx == i
            s = self.segments[i]
            out[m] = s.spline(np.clip(tt[m] - s.offset, 0.0, s.duration), nu)
        return out.reshape(t.shape + (self.dim,))

    def __call__(self, t, nu: int = 0) -> np.ndarray:
        # right-continuous at joints
        return self.evaluate(t, nu, "right")

    def left(self, t, nu: int = 0) -> np.ndarray:
        return self.evaluate(t, nu, "left")

    def start_point(self) -> np.ndarray:
        return self.basepoint.point if self.is_neutral else self(0.0)

    def end_point(self) -> np.ndarray:
        return self.basepoint.point if self.is_neutral else self.left(self.duration)

    def with_basepoint(self, basepoint: BasisPoint) -> "MoorePath":
        return MoorePath(self.manifold, basepoint, self.degree, self.segments, self.jumps)


@dataclass(frozen=True, eq=False)
class FrameCurve:
    """
    Sampled matrix path: times[S], frames[S, n, n].
    Joints of piecewise frames appear as a repeated time holding the left and the right limit.
    """

    times: np.ndarray
    frames: np.ndarray
    jumps: Tuple[Tuple[float, float], ...] = ()
    base: Optional[MoorePath] = None
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 3 or frames.shape[1] != frames.shape[2] or len(times) != len(frames):
            raise ArgumentError("frame curve needs times[S] and frames[S, n, n]")
        if len(times) > 1 and np.any(np.diff(times) < 0):
            raise ArgumentError("frame curve times must be nondecreasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return self.frames.shape[-1]

    @property
    def is_empty(self) -> bool:
        return len(self.times) == 0

    @property
    def duration(self) -> float:
        return 0.0 if self.is_empty else float(self.times[-1] - self.times[0])

    @property
    def is_piecewise(self) -> bool:
        return bool(self.jumps)

    @cached_property
    def _blocks(self) -> List[Tuple[float, BSpline]]:
        cuts = np.flatnonzero(np.diff(self.times) == 0) + 1
        blocks = []
        for idx in np.split(np.arange(len(self.times)), cuts):
            ts = self.times[idx]
            ys = self.frames[idx].reshape(len(idx), -1)
            if len(idx) == 1:
                blocks.append((ts[0], BSpline(np.r_[ts[0], ts[0] + 1.0], ys, 0)))
                continue
            blocks.append((ts[0], make_interp_spline(ts, ys, k=min(3, len(ts) - 1))))
        return blocks

    def at(self, t) -> np.ndarray:
        """Frames at arbitrary times (right-continuous at joints)."""
        if self.exact is not None:
            return self.exact(np.asarray(t, dtype=float))
        if self.is_empty:
            raise ArgumentError("empty frame curve")
        t = np.asarray(t, dtype=float)
        tt = np.clip(np.atleast_1d(t), self.times[0], self.times[-1])
        starts = np.array([b[0] for b in self._blocks])
        idx = np.clip(np.searchsorted(starts, tt, side="right") - 1, 0, len(starts) - 1)
        n = self.dim
        out = np.empty(tt.shape + (n, n))
        for i in np.unique(idx):
            m = idx == i
            out[m] = self._blocks[i][1](tt[m]).reshape(-1, n, n)
        return out.reshape(t.shape + (n, n))

    def concat(self, other: "FrameCurve") -> "FrameCurve":
        """Moore concatenation: other's times are shifted to start where self ends."""
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        shift = self.times[-1] - other.times[0]
        c = safe_closeness(self.frames[-1], other.frames[0])
        joint = ((float(self.times[-1]), c),) if c > JOINT_TOL else ()
        jumps = self.jumps + joint + tuple((t + shift, cl) for t, cl in other.jumps)
        return FrameCurve(np.r_[self.times, other.times + shift], np.concatenate([self.frames, other.frames]), jumps)

    def transform(self, left: Optional[np.ndarray] = None, right: Optional[np.ndarray] = None) -> "FrameCurve":
        F = self.frames
        if left is not None:
            F = np.einsum("...ij,...jk->...ik", left, F)
        if right is not None:
            F = F @ right
        return FrameCurve(self.times, F, self.jumps, self.base)

    def restrict(self, t0: float, t1: float, count: Optional[int] = None) -> "FrameCurve":
        """Uniform resampling of [t0, t1], re-based to start at 0."""
        inside = np.sum((self.times >= t0) & (self.times <= t1))
        count = count or max(int(inside), 2)
        ts = np.linspace(t0, t1, count)
        return FrameCurve(ts - t0, self.at(ts))

    def rescaled(self, duration: float) -> "FrameCurve":
        """Affine reparametrization onto [0, duration]."""
        if self.is_empty or self.duration == 0:
            return self
        c = duration / self.duration
        ts = (self.times - self.times[0]) * c
        return FrameCurve(ts, self.frames, tuple(((t - self.times[0]) * c, cl) for t, cl in self.jumps))


@dataclass(frozen=True)
class PathFamily:
    """Finite family of curves over an index grid (compact families are modeled by finite grids)."""

    index: Tuple[float, ...]
    paths: Tuple[MoorePath, ...]
    lifts: Optional[Tuple[FrameCurve, ...]] = None

    def __post_init__(self):
        if len(self.index) != len(self.paths):
            raise ArgumentError("one path per index value")
        if self.lifts is not None and len(self.lifts) != len(self.paths):
            raise ArgumentError("one lift per path")
        if self.paths:
            M = self.paths[0].manifold
            if any(p.manifold != M for p in self.paths):
                raise ArgumentError("family members must share the manifold")


@dataclass(frozen=True)
class LMReport:
    ok: bool
    failures: Tuple[str, ...]
    margin: float
    piece_margins: Tuple[float, ...]
    start_closeness: float
    end_closeness: float
    max_jump: float
    delta: float

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------- construction helpers ----------------------------

def fit_curve(M: ChartedManifold, times: np.ndarray, points: np.ndarray, *,
              degree: Optional[int] = None, jets=None, closed: bool = False,
              basepoint: Optional[BasisPoint] = None, density: float = 0.0) -> MoorePath:
    """
    Single-segment path through the samples. For closed curves without jets the seam
    jet is estimated from the periodic interpolant, then imposed at both ends.
    """
    times = np.asarray(times, dtype=float)
    times = times - times[0]
    points = np.array(points, dtype=float)
    degree = degree or degree_for(M.dim)
    if closed:
        points[-1] = points[0]
        if jets is None:
            j = periodic_jets(times, points, degree)
            jets = (j, j)
    if jets is not None and not isinstance(jets, tuple):
        jets = (jets, jets)
    M.check_inside(points, "curve samples")
    spl = fit_spline(times, points, degree, jets)
    seg = Segment(0.0, float(times[-1]), spl, density)
    bp = basepoint or BasisPoint(points[0], np.eye(M.dim))
    return MoorePath(M, bp, degree, (seg,))


def from_function(M: ChartedManifold, f: Callable[[np.ndarray], np.ndarray], duration: float,
                  samples: int, *, jets=None, closed: bool = False,
                  basepoint: Optional[BasisPoint] = None, density: float = 0.0) -> MoorePath:
    ts = np.linspace(0.0, duration, samples + 1)
    return fit_curve(M, ts, f(ts), jets=jets, closed=closed, basepoint=basepoint, density=density)


def affine_image(gamma: MoorePath, L: np.ndarray, b: Optional[np.ndarray] = None,
                 basepoint: Optional[BasisPoint] = None) -> MoorePath:
    """Exact image x -> L x + b (B-splines are affine invariant)."""
    L = np.asarray(L, dtype=float)
    b = np.zeros(gamma.dim) if b is None else np.asarray(b, dtype=float)
    segs = tuple(
        Segment(s.offset, s.duration, BSpline(s.spline.t, s.spline.c @ L.T + b, s.spline.k), s.density)
        for s in gamma.segments
    )
    return MoorePath(gamma.manifold, basepoint or gamma.basepoint, gamma.degree, segs, gamma.jumps)


def rescale_time(gamma: MoorePath, factor: float) -> MoorePath:
    """gamma(t / factor) on [0, factor * a]; exact on the knot level."""
    if factor <= 0:
        raise ArgumentError("time factor must be positive")
    segs = tuple(
        Segment(s.offset * factor, s.duration * factor,
                BSpline(s.spline.t * factor, s.spline.c, s.spline.k), s.density / factor)
        for s in gamma.segments
    )
    return MoorePath(gamma.manifold, gamma.basepoint, gamma.degree, segs,
                     tuple((t * factor, c) for t, c in gamma.jumps))


# ---------------------------- grids and frames ----------------------------

def segment_count(seg: Segment, degree: int, density: Optional[float] = None) -> int:
    m = max(density or get_settings().grid_density, seg.density)
    return max(int(math.ceil(m * seg.duration - 1e-9)), 2 * (degree + 1))


def sample_grid(gamma: MoorePath, density: Optional[float] = None) -> Iterator[Tuple[Segment, np.ndarray, np.ndarray]]:
    """(segment, local times, global times) per segment; joints appear in two consecutive blocks."""
    for seg in gamma.segments:
        local = np.linspace(0.0, seg.duration, segment_count(seg, gamma.degree, density) + 1)
        yield seg, local, seg.offset + local


def _segment_fields(M: ChartedManifold, seg: Segment, local: np.ndarray, degree: int, k: int) -> np.ndarray:
    """Covariant derivatives 1..k on the local grid, shape (S, n, k); cached on the segment."""
    key = (M, len(local), k)
    hit = seg.cache.get(key)
    if hit is not None:
        return hit

    x = seg.spline(local)
    M.check_inside(x, "curve")
    D = [seg.spline(local, j) for j in range(1, k + 1)]
    if M.is_flat:
        V = D
    else:
        # V_j = D_j + W_j,  W_1 = 0,  W_j = d/dt W_{j-1} + Gamma(x)(x', V_{j-1})
        V = [D[0]]
        W = np.zeros_like(D[0])
        for j in range(2, k + 1):
            dW = make_interp_spline(local, W, k=degree)(local, 1) if np.any(W) else 0.0
            W = dW + M.gamma_uv(x, D[0], V[-1])
            V.append(D[j - 1] + W)
    out = np.stack(V, axis=-1)
    seg.cache[key] = out
    return out


def covariant_derivatives(M: ChartedManifold, gamma: MoorePath, k: int,
                          density: Optional[float] = None) -> Tuple[np.ndarray, List[np.ndarray]]:
    """(times, [gamma^(1), ..., gamma^(k)]) sampled on the frame grid of gamma."""
    if k < 1:
        raise ArgumentError("k must be >= 1")
    if k > gamma.degree - 1:
        raise SmoothnessError(f"degree {gamma.degree} spline supports at most {gamma.degree - 1} derivatives")
    if gamma.is_neutral:
        return np.zeros(0), [np.zeros((0, M.dim)) for _ in range(k)]
    times, blocks = [], []
    for seg, local, glob in sample_grid(gamma, density):
        times.append(glob)
        blocks.append(_segment_fields(M, seg, local, gamma.degree, k))
    F = np.concatenate(blocks)
    return np.concatenate(times), [F[..., j] for j in range(k)]


def frame_map(M: ChartedManifold, gamma: MoorePath, density: Optional[float] = None) -> FrameCurve:
    """gamma -> F_gamma, columns gamma^(1..n)."""
    n = M.dim
    if gamma.is_neutral:
        return FrameCurve(np.zeros(0), np.zeros((0, n, n)), base=gamma)
    if n > gamma.degree - 1:
        raise SmoothnessError(f"degree {gamma.degree} spline supports at most {gamma.degree - 1} derivatives")
    times, blocks = [], []
    for seg, local, glob in sample_grid(gamma, density):
        times.append(glob)
        blocks.append(_segment_fields(M, seg, local, gamma.degree, n))
    return FrameCurve(np.concatenate(times), np.concatenate(blocks), gamma.jumps, base=gamma)


def end_frames(gamma: MoorePath, density: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """(F(0+), F(a-)) of a non-neutral path."""
    M, n = gamma.manifold, gamma.dim
    if gamma.is_neutral:
        raise ArgumentError("the neutral curve has no frames")
    first, last = gamma.segments[0], gamma.segments[-1]
    if M.is_flat:
        f0 = np.stack([first.spline(0.0, j) for j in range(1, n + 1)], axis=-1)
        f1 = np.stack([last.spline(last.duration, j) for j in range(1, n + 1)], axis=-1)
        return f0, f1
    grids = {id(s): np.linspace(0.0, s.duration, segment_count(s, gamma.degree, density) + 1) for s in (first, last)}
    f0 = _segment_fields(M, first, grids[id(first)], gamma.degree, n)[0]
    f1 = _segment_fields(M, last, grids[id(last)], gamma.degree, n)[-1]
    return f0, f1


def record_frame(gamma: MoorePath) -> MoorePath:
    """Re-record the basepoint as (gamma(0), F_gamma(0)) when that frame is positively oriented."""
    F0, _ = end_frames(gamma)
    if not np.linalg.det(F0) > 0:
        log.debug("frame at t=0 is not positively oriented; basepoint frame kept")
        return gamma.with_basepoint(BasisPoint(gamma.start_point(), gamma.basepoint.frame))
    return gamma.with_basepoint(BasisPoint(gamma.start_point(), F0))


# ---------------------------- margin ----------------------------

def signed_det(M: ChartedManifold, x: np.ndarray, F: np.ndarray) -> np.ndarray:
    """det F sqrt(det g) / prod ||col||_g per sample, 0 where a column vanishes."""
    g = M.metric(x)
    norms = np.sqrt(np.maximum(np.einsum("...ia,...ij,...ja->...a", F, g, F), 0.0))
    prod = np.prod(norms, axis=-1)
    val = np.linalg.det(F) * np.sqrt(np.linalg.det(g)) / np.where(prod > 0, prod, 1.0)
    return np.clip(np.where(np.min(norms, axis=-1) < NORM_FLOOR, 0.0, val), -1.0, 1.0)


def piece_margins(M: ChartedManifold, gamma: MoorePath, density: Optional[float] = None) -> List[float]:
    """
    Per-segment margins, all taken in the orientation of the first sample of gamma and
    clipped at 0, so a sign change anywhere on the grid reads as degenerate.
    """
    out: List[float] = []
    orientation = None
    for seg, local, _ in sample_grid(gamma, density):
        F = _segment_fields(M, seg, local, gamma.degree, M.dim)
        d = signed_det(M, seg.spline(local), F)
        if orientation is None:
            orientation = -1.0 if d[0] < 0 else 1.0
        out.append(float(np.min(np.clip(orientation * d, 0.0, 1.0))))
    return out


def nondeg_margin(M: ChartedManifold, gamma: MoorePath, density: Optional[float] = None) -> float:
    """Min over the frame grid of the column-normalized determinant; 1.0 for the neutral curve."""
    if gamma.is_neutral:
        return 1.0
    if M.dim > gamma.degree - 1:
        raise SmoothnessError(f"degree {gamma.degree} spline supports at most {gamma.degree - 1} derivatives")
    return min(piece_margins(M, gamma, density))


# ---------------------------- frames ----------------------------

def frenet(F: FrameCurve) -> FrameCurve:
    """Gram-Schmidt of the columns (QR with positive diagonal), valued in SO(n)."""
    if F.is_empty:
        return F
    A = F.frames
    norms = np.linalg.norm(A, axis=-2)
    det = np.linalg.det(A)
    scale = np.prod(np.where(norms > 0, norms, 1.0), axis=-1)
    if np.any(np.min(norms, axis=-1) < NORM_FLOOR) or np.any(np.abs(det) / scale < NORM_FLOOR):
        raise DegeneracyError("frame is degenerate at some sample (margin 0)")
    if np.any(det < 0):
        raise PreconditionError("frame is negatively oriented at some sample")
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    return FrameCurve(F.times, Q * signs[..., None, :], F.jumps, F.base)


def frame_closeness(L1: np.ndarray, L2: np.ndarray) -> float:
    """max(||L1 L2^-1 - I||_F, ||L2 L1^-1 - I||_F)."""
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    for L in (L1, L2):
        if L.ndim != 2 or L.shape[0] != L.shape[1] or not np.all(np.isfinite(L)) or np.linalg.cond(L) > 1e12:
            raise ArgumentError("frame_closeness needs nonsingular square matrices")
    eye = np.eye(L1.shape[0])
    a = np.linalg.norm(L1 @ np.linalg.inv(L2) - eye)
    b = np.linalg.norm(L2 @ np.linalg.inv(L1) - eye)
    return float(max(a, b))


def safe_closeness(L1: np.ndarray, L2: np.ndarray) -> float:
    """frame_closeness, or inf when either side is singular."""
    try:
        return frame_closeness(L1, L2)
    except ArgumentError:
        return math.inf


# ---------------------------- monoid structure ----------------------------

def concat(g1: MoorePath, g2: MoorePath, delta: Optional[float] = None) -> MoorePath:
    """Moore concatenation; a frame jump above JOINT_TOL is recorded, above delta it is an error."""
    if g1.is_neutral:
        return g2
    if g2.is_neutral:
        return g1
    if g1.manifold != g2.manifold:
        raise ArgumentError("cannot concatenate curves on different manifolds")
    if g1.degree != g2.degree:
        raise ArgumentError(f"degree mismatch {g1.degree} != {g2.degree}")

    gap = float(np.linalg.norm(g1.end_point() - g2.start_point()))
    if gap > JOINT_TOL:
        raise MismatchError(f"endpoint mismatch {gap:.3e} at the joint")

    _, f1 = end_frames(g1)
    f2, _ = end_frames(g2)
    c = safe_closeness(f1, f2)
    if delta is not None and c > delta:
        raise JumpError(f"frame jump {c:.3e} exceeds delta {delta}", closeness=c)

    a1 = g1.duration
    joint = ((a1, c),) if c > JOINT_TOL else ()
    segs = g1.segments + tuple(s.shifted(s.offset + a1) for s in g2.segments)
    jumps = g1.jumps + joint + tuple((t + a1, cl) for t, cl in g2.jumps)
    return MoorePath(g1.manifold, g1.basepoint, g1.degree, segs, jumps)


def concat_all(paths: Sequence[MoorePath], delta: Optional[float] = None) -> MoorePath:
    out = paths[0]
    for p in paths[1:]:
        out = concat(out, p, delta)
    return out


def power(gamma: MoorePath, N: int, delta: Optional[float] = None) -> MoorePath:
    """gamma^N by repeated concatenation (gamma^0 is neutral)."""
    if N < 0:
        raise ArgumentError("power must be >= 0")
    if N == 0:
        return MoorePath.neutral(gamma.manifold, gamma.basepoint, gamma.degree)
    return concat_all([gamma] * N, delta)


def restrict(gamma: MoorePath, t0: float, t1: float) -> MoorePath:
    """gamma on [t0, t1] as a path starting at time 0; exact, so end frames are F(t0), F(t1)."""
    a = gamma.duration
    t0, t1 = max(0.0, float(t0)), min(a, float(t1))
    if t1 - t0 < 1e-12 or gamma.is_neutral:
        point = gamma(t0) if not gamma.is_neutral else gamma.basepoint.point
        return MoorePath.neutral(gamma.manifold, BasisPoint(point, gamma.basepoint.frame), gamma.degree)

    segs = []
    for s in gamma.segments:
        u0 = max(t0, s.offset) - s.offset
        u1 = min(t1, s.offset + s.duration) - s.offset
        if u1 - u0 < 1e-12:
            continue
        whole = u0 == 0.0 and u1 == s.duration
        spl = s.spline if whole else _restrict_spline(s.spline, u0, u1)
        segs.append(Segment(s.offset + u0 - t0, u1 - u0, spl, s.density, s.cache if whole else {}))
    jumps = tuple((t - t0, c) for t, c in gamma.jumps if t0 < t < t1)
    bp = BasisPoint(gamma(t0), gamma.basepoint.frame)
    return MoorePath(gamma.manifold, bp, gamma.degree, tuple(segs), jumps)


# ---------------------------- membership and distance ----------------------------

def in_LMdelta(M: ChartedManifold, gamma: MoorePath, delta: float,
               frame_tol: Optional[float] = None, density: Optional[float] = None) -> LMReport:
    """Clause-by-clause membership test for L M(delta); never raises on a failing clause."""
    frame_tol = get_settings().frame_tol if frame_tol is None else frame_tol
    if gamma.is_neutral:
        return LMReport(True, (), 1.0, (), 0.0, 0.0, 0.0, delta)

    failures: list[str] = []
    for t in gamma.joints:
        gap = np.linalg.norm(gamma.left(t) - gamma(t))
        dl, dr = gamma.left(t, 1), gamma(t, 1)
        if gap > JOINT_TOL or np.linalg.norm(dl - dr) > C1_TOL * max(1.0, np.linalg.norm(dl)):
            failures.append(f"C1: derivative jump at t={t:.6g}")

    pm = piece_margins(M, gamma, density)
    for i, m in enumerate(pm):
        if not m > 0:
            failures.append(f"margin: piece {i} is degenerate")

    f0, f1 = end_frames(gamma, density)
    ref = gamma.basepoint.frame
    c0, c1 = safe_closeness(f0, ref), safe_closeness(f1, ref)
    if c0 > delta + frame_tol:
        failures.append(f"start_frame: closeness {c0:.3e} > delta")
    if c1 > delta + frame_tol:
        failures.append(f"end_frame: closeness {c1:.3e} > delta")
    for t, c in gamma.jumps:
        if c > delta:
            failures.append(f"jump: closeness {c:.3e} at t={t:.6g} > delta")

    return LMReport(not failures, tuple(failures), min(pm), tuple(pm), c0, c1, gamma.max_jump, delta)


def proxy_distance(M: ChartedManifold, p: MoorePath, q: MoorePath, density: Optional[float] = None) -> float:
    """
    Discrete C^n proxy metric: max coordinate distance plus max_j max g-norm distance of
    gamma^(j); q is affinely reparametrized onto p's duration.
    """
    if p.is_neutral or q.is_neutral:
        raise ArgumentError("proxy distance needs non-neutral curves")
    c = q.duration / p.duration
    Fp = frame_map(M, p, density)
    Fq = frame_map(M, q, density)
    t = Fp.times
    x = p(t)
    pos = float(np.max(np.linalg.norm(x - q(c * t), axis=-1)))
    Q = Fq.at(c * t) * (c ** np.arange(1, M.dim + 1))
    diff = Fp.frames - Q
    g = M.metric(x)
    dn = np.sqrt(np.maximum(np.einsum("sia,sij,sja->sa", diff, g, diff), 0.0))
    return pos + float(np.max(dn))


# ---------------------------- files ----------------------------

def to_payload(gamma: MoorePath) -> dict:
    k = gamma.degree
    knots: list[float] = []
    cps: list[list[float]] = []
    for i, s in enumerate(gamma.segments):
        t = s.spline.t + s.offset
        knots += (t if i == 0 else t[k + 1:]).tolist()
        cps += s.spline.c[: len(s.spline.t) - k - 1].tolist()
    out = {
        "version": 1,
        "manifold": gamma.manifold.descriptor(),
        "duration": gamma.duration,
        "degree": k,
        "knots": knots,
        "control_points": cps,
        "basepoint": gamma.basepoint.to_dict(),
    }
    if gamma.jumps:
        out["jumps"] = [{"t": t, "closeness": c} for t, c in gamma.jumps]
    return out


def from_payload(payload: dict) -> MoorePath:
    """Inverse of to_payload; interior knots of multiplicity degree+1 split segments."""
    M = ChartedManifold.from_descriptor(payload["manifold"])
    k = int(payload["degree"])
    bp = BasisPoint(payload["basepoint"]["point"], payload["basepoint"]["frame"])
    a = float(payload["duration"])
    if a == 0:
        return MoorePath.neutral(M, bp, k)

    knots = np.asarray(payload["knots"], dtype=float)
    cps = np.asarray(payload["control_points"], dtype=float)
    if np.any(knots[: k + 1] != knots[0]) or np.any(knots[-(k + 1):] != knots[-1]):
        raise CurveFileError("curve knots must be clamped", diagnostics=[f"knots: first and last {k + 1} entries must repeat"])

    values, counts = np.unique(knots, return_counts=True)
    if np.any(counts > k + 1):
        bad = values[counts > k + 1][0]
        raise CurveFileError("knot multiplicity too high", diagnostics=[f"knots: value {bad} repeats more than degree+1 times"])
    bounds = [v for v, c in zip(values, counts) if c == k + 1]

    segs, start = [], 0
    for b0, b1 in zip(bounds[:-1], bounds[1:]):
        inner = knots[(knots > b0) & (knots < b1)]
        local = np.r_[[b0] * (k + 1), inner, [b1] * (k + 1)] - b0
        ncoef = len(local) - k - 1
        segs.append(Segment(float(b0), float(b1 - b0), BSpline(local, cps[start:start + ncoef], k)))
        start += ncoef
    jumps = tuple((float(j["t"]), float(j["closeness"])) for j in payload.get("jumps", []))
    return MoorePath(M, bp, k, tuple(segs), jumps)


def load_curve(path: str | Path) -> MoorePath:
    return from_payload(load_curve_payload(path))


def save_curve(gamma: MoorePath, path: str | Path) -> str:
    return write_json_atomic(path, to_payload(gamma))
