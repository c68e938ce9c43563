# geometry/manifold.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from common.errors import ArgumentError, ChartEscapeError, DomainError
from common.logs import get_logger
from common.registry import get_metric
from common.settings import get_settings

if TYPE_CHECKING:
    from geometry.curve import FrameCurve, MoorePath

log = get_logger("manifold")

KINDS = ("euclidean", "sphere", "hyperbolic", "custom")
EUCLIDEAN_RADIUS = 1e3
SPHERE_RADIUS = 10.0


@dataclass(frozen=True)
class BasisPoint:
    """Base point x0 in chart coordinates together with the reference frame F0."""

    point: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        point = np.asarray(self.point, dtype=float)
        frame = np.asarray(self.frame, dtype=float)
        if frame.shape != (point.size, point.size):
            raise ArgumentError(f"basepoint frame must be {point.size}x{point.size}")
        if not np.linalg.det(frame) > 0:
            raise ArgumentError("basepoint frame must have positive determinant")
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "frame", frame)

    @classmethod
    def origin(cls, n: int) -> "BasisPoint":
        return cls(np.zeros(n), np.eye(n))

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "frame": self.frame.tolist()}


@dataclass(frozen=True)
class ChartedManifold:
    """
    A Riemannian metric on the chart ball B_R in R^n.

    Built-ins are conformal, g = exp(2*sigma) * I, with closed-form Christoffel
    symbols; custom manifolds name a registered metric and use finite differences.
    Christoffel arrays are laid out as gamma[..., k, i, j].
    """

    dim: int
    chart_radius: float
    kind: str = "euclidean"
    curvature_scale: float = 1.0
    metric_name: Optional[str] = None
    params: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.dim < 2:
            raise ArgumentError("dim must be >= 2")
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown manifold kind '{self.kind}'")
        if not self.chart_radius > 0:
            raise ArgumentError("chart_radius must be positive")
        if self.kind == "hyperbolic" and self.chart_radius > 1.0 / math.sqrt(self.curvature_scale) + 1e-15:
            raise DomainError("hyperbolic chart radius cannot exceed 1/sqrt(curvature_scale)")
        if self.kind == "custom":
            if not self.metric_name:
                raise ArgumentError("custom manifolds need a registered metric name")
            get_metric(self.metric_name)

    # -------- constructors ----------
    @classmethod
    def euclidean(cls, n: int, chart_radius: float = EUCLIDEAN_RADIUS) -> "ChartedManifold":
        return cls(n, chart_radius, "euclidean")

    @classmethod
    def sphere(cls, n: int, curvature_scale: float = 1.0, chart_radius: float = SPHERE_RADIUS) -> "ChartedManifold":
        return cls(n, chart_radius, "sphere", curvature_scale)

    @classmethod
    def hyperbolic(cls, n: int, curvature_scale: float = 1.0,
                   chart_radius: Optional[float] = None) -> "ChartedManifold":
        return cls(n, chart_radius or 1.0 / math.sqrt(curvature_scale), "hyperbolic", curvature_scale)

    @classmethod
    def custom(cls, n: int, metric: str, chart_radius: float, **params: float) -> "ChartedManifold":
        return cls(n, chart_radius, "custom", 1.0, metric, tuple(sorted(params.items())))

    @classmethod
    def from_descriptor(cls, d: dict) -> "ChartedManifold":
        kind, n = d.get("kind"), int(d.get("dim", 0))
        R = d.get("chart_radius")
        kappa = d.get("curvature_scale") or 1.0
        if kind == "euclidean":
            return cls.euclidean(n, R or EUCLIDEAN_RADIUS)
        if kind == "sphere":
            return cls.sphere(n, kappa, R or SPHERE_RADIUS)
        if kind == "hyperbolic":
            return cls.hyperbolic(n, kappa, R)
        if kind == "custom":
            if R is None:
                raise ArgumentError("custom manifolds need a finite chart_radius")
            return cls.custom(n, d.get("metric") or "", R, **(d.get("params") or {}))
        raise ArgumentError(f"unknown manifold kind '{kind}'")

    def descriptor(self) -> dict:
        d: dict = {"kind": self.kind, "dim": self.dim, "chart_radius": self.chart_radius}
        if self.kind in ("sphere", "hyperbolic"):
            d["curvature_scale"] = self.curvature_scale
        if self.kind == "custom":
            d["metric"] = self.metric_name
            if self.params:
                d["params"] = dict(self.params)
        return d

    @property
    def is_flat(self) -> bool:
        return self.kind == "euclidean"

    @property
    def is_conformal(self) -> bool:
        return self.kind in ("euclidean", "sphere", "hyperbolic")

    # -------- chart ----------
    def radius_of(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)

    def inside(self, x: np.ndarray) -> np.ndarray:
        return self.radius_of(x) < self.chart_radius

    def check_inside(self, x: np.ndarray, what: str = "point") -> None:
        r = self.radius_of(x)
        if not np.all(np.isfinite(r)) or np.any(r >= self.chart_radius):
            raise ChartEscapeError(f"{what} leaves the chart ball of radius {self.chart_radius}",
                                   max_radius=float(np.nanmax(r)) if r.size else None)

    # -------- metric ----------
    def _dsigma(self, x: np.ndarray) -> np.ndarray:
        """Gradient of sigma for the conformal built-ins."""
        kappa = self.curvature_scale
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        if self.kind == "sphere":
            return -2.0 * kappa * x / (1.0 + kappa * r2)
        if self.kind == "hyperbolic":
            return 2.0 * kappa * x / (1.0 - kappa * r2)
        return np.zeros_like(x)

    def conformal_factor(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1)
        if self.kind == "sphere":
            return 4.0 / (1.0 + self.curvature_scale * r2) ** 2
        if self.kind == "hyperbolic":
            return 4.0 / (1.0 - self.curvature_scale * r2) ** 2
        return np.ones_like(r2)

    def metric(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "custom":
            return get_metric(self.metric_name)(x, **dict(self.params))
        return self.conformal_factor(x)[..., None, None] * np.eye(self.dim)

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.is_conformal:
            return christoffel_fd(self, x)
        ds = self._dsigma(x)
        eye = np.eye(self.dim)
        # delta_ik d_j sigma + delta_jk d_i sigma - delta_ij d_k sigma
        return (np.einsum("ki,...j->...kij", eye, ds)
                + np.einsum("kj,...i->...kij", eye, ds)
                - np.einsum("ij,...k->...kij", eye, ds))

    def gamma_uv(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Contraction Gamma(x)(u, v)^k = Gamma^k_ij u^i v^j, broadcast over leading axes."""
        x, u, v = (np.asarray(a, dtype=float) for a in (x, u, v))
        if self.is_flat:
            return np.zeros(np.broadcast_shapes(x.shape, u.shape, v.shape))
        if self.is_conformal:
            ds = self._dsigma(x)
            return (u * np.sum(ds * v, axis=-1, keepdims=True)
                    + v * np.sum(ds * u, axis=-1, keepdims=True)
                    - ds * np.sum(u * v, axis=-1, keepdims=True))
        return np.einsum("...kij,...i,...j->...k", self.christoffel(x), u, v)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...ij,...j->...", u, self.metric(x), v)

    def norm(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(x, v, v), 0.0))


# ---------------------------- operations ----------------------------

def christoffel_fd(M: ChartedManifold, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """Christoffel symbols from central differences of the metric, gamma[..., k, i, j]."""
    h = h or get_settings().fd_step
    x = np.asarray(x, dtype=float)
    if np.any(M.radius_of(x) + h >= M.chart_radius):
        raise DomainError(f"christoffel_fd needs |x| + h < R = {M.chart_radius}")

    n = M.dim
    # dg[..., l, a, b] = d_l g_ab
    dg = np.stack([(M.metric(x + h * e) - M.metric(x - h * e)) / (2.0 * h) for e in np.eye(n)], axis=-3)
    lower = 0.5 * (np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)
    gamma = np.einsum("...kl,...lij->...kij", np.linalg.inv(M.metric(x)), lower)
    return 0.5 * (gamma + np.swapaxes(gamma, -1, -2))


def _step_count(M: ChartedManifold, x: np.ndarray, v: np.ndarray, steps: Optional[int]) -> int:
    if steps:
        return int(steps)
    base = get_settings().geodesic_steps
    speed = float(np.max(M.norm(x, v))) if v.size else 0.0
    return max(base, int(math.ceil(base * speed)))


def geodesic(M: ChartedManifold, x: np.ndarray, v: np.ndarray,
             steps: Optional[int] = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    RK4 integration of x'' + Gamma(x)(x', x') = 0 on [0, 1].
    Returns (s, xs, vs) with xs, vs of shape (steps + 1, ..., n).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    x, v = np.broadcast_arrays(x, v)
    x, v = x.copy(), v.copy()
    M.check_inside(x, "geodesic start")

    m = _step_count(M, x, v, steps)
    h = 1.0 / m
    xs, vs = [x], [v]

    def acc(p, q):
        return -M.gamma_uv(p, q, q)

    for i in range(m):
        k1x, k1v = v, acc(x, v)
        k2x, k2v = v + 0.5 * h * k1v, acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = v + 0.5 * h * k2v, acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = v + h * k3v, acc(x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        r = M.radius_of(x)
        if not np.all(np.isfinite(r)) or np.any(r >= M.chart_radius):
            s = (i + 1) * h
            log.debug("geodesic escaped chart at s=%.6f", s)
            raise ChartEscapeError(f"geodesic leaves the chart at parameter {s:.6f}", exit_parameter=s)
        xs.append(x)
        vs.append(v)

    return np.linspace(0.0, 1.0, m + 1), np.stack(xs), np.stack(vs)


def exp_map(M: ChartedManifold, x: np.ndarray, v: np.ndarray, steps: Optional[int] = None) -> np.ndarray:
    """exp_x(v); x and v broadcast over leading axes."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if M.is_flat:
        out = x + v
        r = M.radius_of(out)
        if np.any(r >= M.chart_radius):
            raise ChartEscapeError(f"exp leaves the chart ball of radius {M.chart_radius}", exit_parameter=None)
        return out
    if not np.any(v):
        return np.broadcast_to(x, np.broadcast_shapes(x.shape, v.shape)).copy()
    _, xs, _ = geodesic(M, x, v, steps)
    return xs[-1]


def parallel_transport(M: ChartedManifold, gamma: "MoorePath", F: np.ndarray,
                       density: Optional[float] = None) -> "FrameCurve":
    """Transport the columns of F along gamma: E' + Gamma(gamma)(gamma', E) = 0, RK4 on the frame grid."""
    from geometry.curve import FrameCurve, sample_grid

    F = np.asarray(F, dtype=float)
    if F.shape != (M.dim, M.dim) or abs(np.linalg.det(F)) < 1e-300 or np.linalg.cond(F) > 1e12:
        raise ArgumentError("parallel_transport needs a nonsingular n x n frame")
    if gamma.is_neutral:
        return FrameCurve(np.zeros(0), np.zeros((0, M.dim, M.dim)), base=gamma)

    def rhs(x, v, E):
        # columns of E are transported vectors; gamma_uv works on rows
        return -M.gamma_uv(x[None, :], v[None, :], E.T).T

    times, frames = [], []
    E = F.copy()
    for seg, local, glob in sample_grid(gamma, density):
        mid = 0.5 * (local[:-1] + local[1:])
        x0, v0 = seg.spline(local), seg.spline(local, 1)
        xm, vm = seg.spline(mid), seg.spline(mid, 1)
        M.check_inside(x0, "curve")
        block = [E]
        for i in range(len(local) - 1):
            h = local[i + 1] - local[i]
            k1 = rhs(x0[i], v0[i], E)
            k2 = rhs(xm[i], vm[i], E + 0.5 * h * k1)
            k3 = rhs(xm[i], vm[i], E + 0.5 * h * k2)
            k4 = rhs(x0[i + 1], v0[i + 1], E + h * k3)
            E = E + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            block.append(E)
        times.append(glob)
        frames.append(np.stack(block))

    return FrameCurve(np.concatenate(times), np.concatenate(frames), base=gamma)


def exp_frame(M: ChartedManifold, lift: "FrameCurve", t, v: np.ndarray) -> np.ndarray:
    """exp_{gamma(t)}(sum_i v_i E_i(t)) with E_i the columns of the lift at t."""
    if lift.base is None:
        raise ArgumentError("exp_frame needs a frame curve that carries its base curve")
    t = np.asarray(t, dtype=float)
    x = lift.base(t)
    E = lift.at(t)
    w = np.einsum("...ij,...j->...i", E, np.asarray(v, dtype=float))
    return exp_map(M, x, w)
