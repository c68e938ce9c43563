# geometry/spin.py
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.linalg import logm

from common.errors import ArgumentError, LiftError, PreconditionError, ResolutionError
from common.logs import get_logger
from geometry.curve import FrameCurve, MoorePath, frame_map, frenet
from geometry.manifold import ChartedManifold

log = get_logger("spin")

MAX_DIM = 8
STEP_LIMIT = math.pi / 2
SUBSAMPLE_ANGLE = math.pi / 4
SANDWICH_TOL = 1e-8
RESIDUAL_TOL = 1e-6
CLOSED_TOL = 1e-6


# -------- Clifford algebra Cl(n), blades indexed by bitmask ----------

def _reorder_sign(a: int, b: int) -> int:
    a >>= 1
    s = 0
    while a:
        s += bin(a & b).count("1")
        a >>= 1
    return -1 if s & 1 else 1


@lru_cache(maxsize=None)
def _tables(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(product mask[a, b], sign[a, b], reversion sign[a]) for all 2^n blades."""
    if not 1 <= n <= MAX_DIM:
        raise ArgumentError(f"Clifford tables support 1 <= n <= {MAX_DIM}")
    size = 1 << n
    idx = np.arange(size)
    mask = idx[:, None] ^ idx[None, :]
    sign = np.array([[_reorder_sign(a, b) for b in range(size)] for a in range(size)], dtype=float)
    grade = np.array([bin(a).count("1") for a in range(size)])
    rev = np.where((grade * (grade - 1) // 2) % 2, -1.0, 1.0)
    return mask, sign, rev


@lru_cache(maxsize=None)
def even_masks(n: int) -> np.ndarray:
    return np.array([a for a in range(1 << n) if bin(a).count("1") % 2 == 0])


def gp(n: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geometric product of two dense multivectors of Cl(n)."""
    mask, sign, _ = _tables(n)
    out = np.zeros(1 << n)
    np.add.at(out, mask.ravel(), (sign * np.outer(x, y)).ravel())
    return out


def reverse(n: int, x: np.ndarray) -> np.ndarray:
    return _tables(n)[2] * x


def bivector(S: np.ndarray) -> np.ndarray:
    """sum_{i<j} S_ij e_i e_j as a dense multivector."""
    n = S.shape[0]
    out = np.zeros(1 << n)
    for i in range(n):
        for j in range(i + 1, n):
            out[(1 << i) | (1 << j)] = S[i, j]
    return out


def mv_exp(n: int, x: np.ndarray, terms: int = 24) -> np.ndarray:
    """exp by truncated series after scaling by 2^-s, then s squarings."""
    norm = float(np.linalg.norm(x))
    s = max(0, int(math.ceil(math.log2(norm / 0.25)))) if norm > 0 else 0
    y = x / (1 << s)
    out = np.zeros(1 << n)
    out[0] = 1.0
    term = out.copy()
    for k in range(1, terms):
        term = gp(n, term, y) / k
        out = out + term
    for _ in range(s):
        out = gp(n, out, out)
    return out


# -------- rotors ----------

@dataclass(frozen=True, eq=False)
class Rotor:
    """Element of Spin(n) stored on the even blades (2^(n-1) coefficients)."""

    dim: int
    coefficients: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "Rotor":
        c = np.zeros(len(even_masks(n)))
        c[0] = 1.0
        return cls(n, c)

    @classmethod
    def from_dense(cls, n: int, x: np.ndarray) -> "Rotor":
        return cls(n, np.asarray(x, dtype=float)[even_masks(n)])

    def dense(self) -> np.ndarray:
        out = np.zeros(1 << self.dim)
        out[even_masks(self.dim)] = self.coefficients
        return out

    @property
    def scalar(self) -> float:
        return float(self.coefficients[0])

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.coefficients[1:]), initial=0.0))

    def norm2(self) -> float:
        return float(np.sum(self.coefficients ** 2))

    def reversed(self) -> "Rotor":
        return Rotor.from_dense(self.dim, reverse(self.dim, self.dense()))

    def __mul__(self, other: "Rotor") -> "Rotor":
        if other.dim != self.dim:
            raise ArgumentError("rotor dimensions differ")
        return Rotor.from_dense(self.dim, gp(self.dim, self.dense(), other.dense()))

    def coefficient(self, *axes: int) -> float:
        """Coefficient of e_{axes[0]} e_{axes[1]} ... (0-based, increasing)."""
        m = sum(1 << a for a in axes)
        return float(self.dense()[m])

    def act(self, v: np.ndarray) -> np.ndarray:
        """Sandwich R v R~ of a vector."""
        n = self.dim
        x = np.zeros(1 << n)
        x[[1 << i for i in range(n)]] = v
        R = self.dense()
        y = gp(n, gp(n, R, x), reverse(n, R))
        return y[[1 << i for i in range(n)]]

    def matrix(self) -> np.ndarray:
        return np.stack([self.act(np.eye(self.dim)[k]) for k in range(self.dim)], axis=-1)


def rotation_angles(Q: np.ndarray) -> np.ndarray:
    """Largest principal rotation angle of each matrix in a batch (..., n, n)."""
    return np.max(np.abs(np.angle(np.linalg.eigvals(Q))), axis=-1)


def rotor_step(R_prev: np.ndarray, R_next: np.ndarray) -> Rotor:
    """Rotor of Q = R_prev^T R_next; a rotation by theta in the (1,2)-plane gives cos(theta/2) - sin(theta/2) e12."""
    R_prev = np.asarray(R_prev, dtype=float)
    R_next = np.asarray(R_next, dtype=float)
    n = R_prev.shape[0]
    Q = R_prev.T @ R_next
    angle = float(rotation_angles(Q))
    if angle >= STEP_LIMIT:
        raise ResolutionError(f"rotation angle {angle:.4f} between samples is not below pi/2; refine the grid")
    S = np.real(logm(Q))
    S = 0.5 * (S - S.T)
    rotor = Rotor.from_dense(n, mv_exp(n, bivector(0.5 * S)))
    err = float(np.max(np.abs(rotor.matrix() - Q)))
    if err > SANDWICH_TOL:
        raise LiftError(f"rotor sandwich misses the rotation by {err:.3e}")
    return rotor


# -------- loop classes ----------

@dataclass(frozen=True)
class LoopClass:
    value: int
    residual: float
    samples: int


def gl_to_so(F: FrameCurve) -> FrameCurve:
    """Gram-Schmidt retraction onto SO(n); identical to the Frenet normalization."""
    return frenet(F)


def _is_orthogonal(frames: np.ndarray, tol: float = 1e-9) -> bool:
    eye = np.eye(frames.shape[-1])
    return bool(np.max(np.abs(np.swapaxes(frames, -1, -2) @ frames - eye)) <= tol)


def _keep_indices(angles: np.ndarray) -> list[int]:
    keep, acc = [0], 0.0
    for i, step in enumerate(angles, start=1):
        if acc + step > SUBSAMPLE_ANGLE and keep[-1] != i - 1:
            keep.append(i - 1)
            acc = 0.0
        acc += step
    if keep[-1] != len(angles):
        keep.append(len(angles))
    return keep


def loop_class(F: FrameCurve) -> LoopClass:
    """Sign of the Spin(n) lift of a closed frame loop (+1 for the empty loop)."""
    if F.is_empty:
        return LoopClass(1, 0.0, 0)
    n = F.dim
    if n < 2:
        raise ArgumentError("loop classes need n >= 2")
    frames = F.frames if _is_orthogonal(F.frames) else gl_to_so(F).frames
    gap = float(np.linalg.norm(frames[0] - frames[-1]))
    if gap > CLOSED_TOL:
        raise PreconditionError(f"frame loop is not closed (end gap {gap:.3e})")

    steps = rotation_angles(np.swapaxes(frames[:-1], -1, -2) @ frames[1:])
    keep = _keep_indices(steps)
    R = Rotor.identity(n)
    for p, q in zip(keep[:-1], keep[1:]):
        R = R * rotor_step(frames[p], frames[q])

    res = R.residual
    log.debug("loop lift: %d samples, %d kept, scalar=%.9f residual=%.3e", len(frames), len(keep), R.scalar, res)
    if res > RESIDUAL_TOL:
        raise LiftError(f"lifted loop does not close in Spin(n) (residual {res:.3e})")
    return LoopClass(1 if R.scalar > 0 else -1, res, len(keep))


def curve_class(M: ChartedManifold, gamma: MoorePath, density=None) -> LoopClass:
    """Class of the frame loop of a closed curve inside one chart."""
    if gamma.is_neutral:
        return LoopClass(1, 0.0, 0)
    return loop_class(gl_to_so(frame_map(M, gamma, density)))
