# geometry/construct.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.signal import convolve

from common.errors import (
    ArgumentError,
    ChartEscapeError,
    ConstructionError,
    ExhaustionError,
    PreconditionError,
    ScalingError,
    SmoothingError,
)
from common.logs import get_logger
from common.settings import get_settings
from geometry.curve import (
    FrameCurve,
    MoorePath,
    PathFamily,
    affine_image,
    concat,
    concat_all,
    end_frames,
    fit_curve,
    frame_map,
    frenet,
    nondeg_margin,
    piece_margins,
    power,
    proxy_distance,
    record_frame,
    restrict,
    safe_closeness,
)
from geometry.manifold import BasisPoint, ChartedManifold, exp_map

log = get_logger("construct")

SEAM_TOL = 1e-9
MIN_SCALE_EXP = 20
KERNEL = "exp(-1/(1-(s/tau)^2)), truncated and renormalized at the ends"


# ---------------------------- smooth steps ----------------------------

def _psi(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m])
    return out


def smooth_step(x: np.ndarray) -> np.ndarray:
    """0 for x <= 0, 1 for x >= 1, smooth in between (all derivatives vanish at 0 and 1)."""
    a, b = _psi(x), _psi(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class BlendProfile:
    """f_eps on [0, 1]: 1 on [0, eps/2] and [1 - eps/2, 1], 0 on [eps, 1 - eps]."""

    eps: float

    def __post_init__(self):
        if not 0 < self.eps <= 0.5:
            raise ArgumentError("blend width eps must lie in (0, 0.5]")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        d = np.minimum(s, 1.0 - s)
        half = 0.5 * self.eps
        return 1.0 - smooth_step((d - half) / half)


# ---------------------------- twists ----------------------------

def _odd_block() -> List[Tuple[Tuple[float, str, int], ...]]:
    # alpha' ~ c + cos(3u) c' + sin(3u) e3 with c = (cos u, sin u, 0): det(a', a'', a''') stays positive
    return [
        ((1.0, "sin", 1), (-0.25, "cos", 2), (0.125, "cos", 4)),
        ((-1.0, "cos", 1), (0.25, "sin", 2), (0.125, "sin", 4)),
        ((-1.0 / 3.0, "cos", 3),),
    ]


def twist_terms(n: int) -> Tuple[Tuple[Tuple[float, str, int], ...], ...]:
    """Per-coordinate harmonic terms (amplitude, cos|sin, frequency) in u = 2*pi*t."""
    if n < 2:
        raise ArgumentError("twists need n >= 2")
    coords: list = []
    if n % 2 == 0:
        for p in range(1, n // 2 + 1):
            coords += [((1.0, "cos", p),), ((1.0, "sin", p),)]
    else:
        coords = _odd_block()
        for p in range(5, 5 + (n - 3) // 2):
            coords += [((1.0, "cos", p),), ((1.0, "sin", p),)]
    return tuple(coords)


@dataclass(frozen=True)
class TwistSpec:
    """Certified closed curve alpha in R^n with alpha(0) = 0, duration 1."""

    dim: int
    terms: Tuple[Tuple[Tuple[float, str, int], ...], ...]
    path: MoorePath
    certificate: Dict[str, float] = field(default_factory=dict)

    @property
    def profile(self) -> Tuple[int, ...]:
        return tuple(sorted({p for c in self.terms for _, _, p in c}))

    @property
    def frame(self) -> np.ndarray:
        return self.path.basepoint.frame

    @property
    def margin(self) -> float:
        return self.certificate.get("margin", 0.0)

    def _raw(self, t, j: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.dim,))
        for c, terms in enumerate(self.terms):
            for amp, kind, p in terms:
                w = 2.0 * math.pi * p
                phase = w * t + j * math.pi / 2
                out[..., c] += amp * w ** j * (np.cos(phase) if kind == "cos" else np.sin(phase))
        return out

    def position(self, t) -> np.ndarray:
        return self._raw(t, 0) - self._raw(0.0, 0)

    def derivative(self, t, j: int) -> np.ndarray:
        return self.position(t) if j == 0 else self._raw(t, j)

    def jet(self, t: float = 0.0) -> np.ndarray:
        """Derivatives 1..n at t, shape (n, n) (row j-1 holds alpha^(j))."""
        return np.stack([self._raw(t, j) for j in range(1, self.dim + 1)])


def make_twist(n: int, samples: Optional[int] = None) -> TwistSpec:
    """The standard twist of R^n, fitted with its exact seam jet and certified."""
    cfg = get_settings()
    samples = samples or 2 * cfg.samples_per_turn
    M = ChartedManifold.euclidean(n)
    terms = twist_terms(n)
    proto = TwistSpec(n, terms, MoorePath.neutral(M))

    ts = np.linspace(0.0, 1.0, samples + 1)
    jet = proto.jet(0.0)
    alpha = fit_curve(M, ts, proto.position(ts), jets=(jet, jet))
    alpha = record_frame(alpha)

    margin = nondeg_margin(M, alpha)
    seam = max(
        float(np.linalg.norm(alpha(0.0, j) - alpha.left(1.0, j)) / max(1.0, np.linalg.norm(alpha(0.0, j))))
        for j in range(1, n + 1)
    )
    log.info("twist n=%d margin=%.6f seam=%.3e", n, margin, seam)
    if not margin > 0 or seam > SEAM_TOL:
        raise ConstructionError(f"twist profile for n={n} failed certification (margin={margin:.3e}, seam={seam:.3e})")
    return TwistSpec(n, terms, alpha, {"margin": margin, "seam_error": seam})


# ---------------------------- exponential scaling ----------------------------

def exp_twist(M: ChartedManifold, twist: TwistSpec, lam: float, x0: Optional[np.ndarray] = None,
              samples: Optional[int] = None) -> MoorePath:
    """exp_{x0}(lam * alpha) as a closed path with its frame re-recorded."""
    x0 = np.zeros(M.dim) if x0 is None else np.asarray(x0, dtype=float)
    if M.is_flat:
        return record_frame(affine_image(twist.path, lam * np.eye(M.dim), x0).with_basepoint(
            BasisPoint(x0, twist.frame)))
    samples = samples or 2 * get_settings().samples_per_turn
    ts = np.linspace(0.0, 1.0, samples + 1)
    pts = exp_map(M, x0, lam * twist.position(ts))
    return record_frame(fit_curve(M, ts, pts, closed=True))


def scale_into_manifold(M: ChartedManifold, twist: TwistSpec, tol: Optional[float] = None) -> Tuple[float, MoorePath]:
    """Largest lam in {1, 1/2, ...} with exp_{x0}(lam alpha) inside the chart and margin >= tol."""
    tol = get_settings().margin_tol if tol is None else tol
    if M.is_flat:
        return 1.0, twist.path
    if tol >= twist.margin:
        raise ScalingError(f"tolerance {tol} is not below the flat margin {twist.margin:.6f}")
    for i in range(MIN_SCALE_EXP + 1):
        lam = 2.0 ** -i
        try:
            omega = exp_twist(M, twist, lam)
        except ChartEscapeError:
            log.debug("lambda=%g leaves the chart", lam)
            continue
        m = nondeg_margin(M, omega)
        log.debug("lambda=%g margin=%.6f", lam, m)
        if m >= tol:
            log.info("scale_into_manifold: lambda0=%g margin=%.6f", lam, m)
            return lam, omega
    raise ScalingError(f"no lambda >= 2^-{MIN_SCALE_EXP} reaches margin {tol}")


def _scaled_member(M: ChartedManifold, member: TwistSpec | MoorePath, lam: float) -> MoorePath:
    if isinstance(member, TwistSpec):
        return member.path if M.is_flat else exp_twist(M, member, lam)
    return transfer_flat(M, member, lam)


def scale_family(M: ChartedManifold, members: Sequence[TwistSpec | MoorePath],
                 tol: Optional[float] = None) -> Tuple[float, PathFamily]:
    """
    One common lambda0 for a finite family of twists and flat curves. Twists go through
    exp_twist, flat curves through transfer_flat; in a flat M only lambda = 1 is tried.
    """
    tol = get_settings().margin_tol if tol is None else tol
    for m in members:
        if not isinstance(m, (TwistSpec, MoorePath)):
            raise ArgumentError(f"cannot scale a {type(m).__name__} into a manifold")
        if m.dim != M.dim:
            raise ArgumentError(f"family member of dimension {m.dim} in a {M.dim}-manifold")
        if isinstance(m, MoorePath) and not m.manifold.is_flat:
            raise ArgumentError("only flat curves can be transferred")
    for i in range(MIN_SCALE_EXP + 1):
        lam = 2.0 ** -i
        try:
            paths = [_scaled_member(M, m, lam) for m in members]
        except ChartEscapeError:
            log.debug("lambda=%g leaves the chart", lam)
            continue
        margins = [nondeg_margin(M, p) for p in paths]
        log.debug("lambda=%g min margin=%.6f", lam, min(margins, default=1.0))
        if all(v >= tol for v in margins):
            log.info("scale_family: lambda0=%g over %d members", lam, len(paths))
            lifts = tuple(frame_map(M, p) for p in paths)
            return lam, PathFamily(tuple(range(len(paths))), tuple(paths), lifts)
        if M.is_flat:
            break
    raise ScalingError(f"no common lambda >= 2^-{MIN_SCALE_EXP} reaches margin {tol}")


def transfer_flat(M: ChartedManifold, gamma: MoorePath, lam: float, samples: Optional[int] = None) -> MoorePath:
    """exp_{x0}(lam * (gamma(t / lam) - gamma(0))) on [0, lam * a]."""
    if gamma.is_neutral:
        return MoorePath.neutral(M)
    a = gamma.duration
    samples = samples or max(2 * get_settings().samples_per_turn, int(math.ceil(get_settings().samples_per_turn * a)))
    x0 = np.zeros(M.dim)
    s = np.linspace(0.0, a, samples + 1)
    rel = gamma(s) - gamma(0.0)
    pts = rel * lam if M.is_flat else exp_map(M, x0, lam * rel)
    closed = np.linalg.norm(gamma.end_point() - gamma.start_point()) <= 1e-9
    out = fit_curve(M, lam * s, pts, closed=closed)
    return record_frame(out)


# ---------------------------- frame loops ----------------------------

def rotation_loop(n: int, turns: float = 1.0, duration: float = 1.0, plateau: float = 0.1,
                  density: Optional[float] = None) -> FrameCurve:
    """A(t) = rotation in the (e1, e2)-plane by 2 pi turns h(t); A = Id on the plateaus at both ends."""
    if n < 2:
        raise ArgumentError("rotation loops need n >= 2")
    if not 0 <= plateau < duration / 2:
        raise ArgumentError("plateau must be shorter than half the duration")

    def A(t):
        t = np.asarray(t, dtype=float)
        th = 2.0 * math.pi * turns * smooth_step((t - plateau) / (duration - 2 * plateau))
        R = np.broadcast_to(np.eye(n), t.shape + (n, n)).copy()
        c, s = np.cos(th), np.sin(th)
        R[..., 0, 0], R[..., 0, 1], R[..., 1, 0], R[..., 1, 1] = c, -s, s, c
        return R

    m = density or get_settings().grid_density
    ts = np.linspace(0.0, duration, int(math.ceil(m * duration)) + 1)
    return FrameCurve(ts, A(ts), exact=A)


def constant_lift(gamma: MoorePath, F: Optional[np.ndarray] = None) -> FrameCurve:
    """The lift t -> F over gamma (identity by default)."""
    n = gamma.dim
    F = np.eye(n) if F is None else np.asarray(F, dtype=float)

    def lift(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(F, t.shape + (n, n)).copy()

    ts = np.array([0.0, gamma.duration])
    return FrameCurve(ts, lift(ts), base=gamma, exact=lift)


# ---------------------------- matrix telephone wires ----------------------------

@dataclass(frozen=True)
class WireResult:
    N: int
    path: MoorePath
    margin: float
    closeness: Optional[Tuple[float, float]] = None
    profile: Tuple[Dict[str, float], ...] = ()


def _check_wire_inputs(A: FrameCurve, omega: MoorePath) -> None:
    if A.is_empty or A.duration <= 0:
        raise PreconditionError("A must be a loop of positive duration")
    a, n = A.duration, A.dim
    if omega.is_neutral or omega.dim != n:
        raise PreconditionError("omega must be a non-neutral curve of the same dimension as A")
    edge = np.r_[np.linspace(0.0, 0.01 * a, 5), np.linspace(0.99 * a, a, 5)] + A.times[0]
    if np.max(np.abs(A.at(edge) - np.eye(n))) > 1e-9:
        raise PreconditionError("A must equal the identity near both endpoints")
    if np.linalg.norm(omega.end_point() - omega.start_point()) > 1e-9:
        raise PreconditionError("omega must be closed")
    f0, f1 = end_frames(omega)
    if safe_closeness(f0, f1) > get_settings().frame_tol:
        raise PreconditionError("omega must have matching end frames")


def matrix_wire(A: FrameCurve, omega: MoorePath, N: int, samples_per_turn: Optional[int] = None) -> MoorePath:
    """A^[N](t) = A(t) omega(N a_omega t / a), fitted with the exact seam jets."""
    if N < 1:
        raise ArgumentError("N must be >= 1")
    _check_wire_inputs(A, omega)
    cfg = get_settings()
    spt = samples_per_turn or cfg.samples_per_turn
    a, aw, n = A.duration, omega.duration, A.dim
    rate = N * aw / a

    count = max(int(math.ceil(cfg.grid_density * a)), spt * N)
    ts = np.linspace(0.0, a, count + 1)
    u = np.mod(rate * ts, aw)
    pts = np.einsum("sij,sj->si", A.at(ts + A.times[0]), omega(u))

    j0 = np.stack([rate ** j * omega(0.0, j) for j in range(1, n + 1)])
    j1 = np.stack([rate ** j * omega.left(aw, j) for j in range(1, n + 1)])
    wire = fit_curve(omega.manifold, ts, pts, jets=(j0, j1), density=spt * N / a)
    return record_frame(wire)


def find_wire_N(A: FrameCurve, omega: MoorePath, tol: Optional[float] = None,
                N_max: Optional[int] = None) -> WireResult:
    """Smallest even N <= N_max whose matrix wire has margin >= tol."""
    cfg = get_settings()
    tol = cfg.margin_tol if tol is None else tol
    N_max = N_max or cfg.n_max
    profile: list[dict] = []
    for N in range(2, N_max + 1, 2):
        wire = matrix_wire(A, omega, N)
        m = nondeg_margin(omega.manifold, wire)
        profile.append({"N": N, "margin": m})
        log.debug("wire N=%d margin=%.6f", N, m)
        if m >= tol:
            log.info("find_wire_N: N=%d margin=%.6f", N, m)
            return WireResult(N, wire, m, profile=tuple(profile))
    raise ExhaustionError(f"no even N <= {N_max} reaches margin {tol}", profile=profile)


def derivative_asymptotics(A: FrameCurve, omega: MoorePath, Ns: Sequence[int],
                           k_max: Optional[int] = None) -> List[Dict[str, float]]:
    """
    Rows (N, k, deviation) of
    max_t |(A^[N])^(k)(t) - r^k A(t) omega^(k)(r t)| / (r^k max |omega^(k)|),  r = N a_omega / a.
    """
    n = A.dim
    k_max = k_max or n
    a, aw = A.duration, omega.duration
    spt = get_settings().samples_per_turn
    grid_w = np.linspace(0.0, aw, 4 * spt + 1)
    scale = {k: float(np.max(np.linalg.norm(omega(grid_w, k), axis=-1))) for k in range(1, k_max + 1)}

    rows = []
    for N in Ns:
        wire = matrix_wire(A, omega, N)
        rate = N * aw / a
        ts = np.linspace(0.0, a, 2 * spt * N + 1)
        u = np.mod(rate * ts, aw)
        At = A.at(ts + A.times[0])
        for k in range(1, k_max + 1):
            lead = rate ** k * np.einsum("sij,sj->si", At, omega(u, k))
            dev = np.max(np.linalg.norm(wire(ts, k) - lead, axis=-1)) / (rate ** k * scale[k])
            rows.append({"N": N, "k": k, "deviation": float(dev)})
    return rows


def cut_insert(A: FrameCurve, omega: MoorePath, N: int) -> FrameCurve:
    """A_1 f_1 A_2 f_2 ... A_{N/2} f_{N/2} with f_i = A(2ia/N) Fr_{omega^2} Fr_{omega^2}(0)^-1."""
    if N < 2 or N % 2:
        raise ArgumentError("cut_insert needs an even N >= 2")
    _check_wire_inputs(A, omega)
    a, t0 = A.duration, A.times[0]
    Fr = frenet(frame_map(omega.manifold, power(omega, 2)))
    loop = Fr.transform(right=np.linalg.inv(Fr.frames[0]))

    out = FrameCurve(np.zeros(0), np.zeros((0, A.dim, A.dim)))
    per = max(int(math.ceil(len(A.times) * 2 / N)), 2)
    for i in range(1, N // 2 + 1):
        lo, hi = 2 * (i - 1) * a / N, 2 * i * a / N
        piece = A.restrict(t0 + lo, t0 + hi, per)
        out = out.concat(piece).concat(loop.transform(left=A.at(t0 + hi)))
    return out


def frame_c0_distance(F1: FrameCurve, F2: FrameCurve, samples: int = 4097) -> float:
    """max Frobenius distance after rescaling both frame curves onto [0, 1]."""
    s = np.linspace(0.0, 1.0, samples)
    G1, G2 = F1.rescaled(1.0), F2.rescaled(1.0)
    return float(np.max(np.linalg.norm(G1.at(s) - G2.at(s), axis=(-2, -1))))


def cut_insert_distance(A: FrameCurve, omega: MoorePath, N: int) -> float:
    """C^0 distance between cut_insert and the normalized Frenet frame of matrix_wire."""
    wire = matrix_wire(A, omega, N)
    Fw = frenet(frame_map(omega.manifold, wire))
    F0 = frenet(frame_map(omega.manifold, omega)).frames[0]
    return frame_c0_distance(cut_insert(A, omega, N), Fw.transform(right=np.linalg.inv(F0)))


# ---------------------------- twists inserted along a base curve ----------------------------

def twist_at(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, p: float, *,
             turns: int = 1, frame_normalized: bool = False, closed: bool = True,
             samples_per_turn: Optional[int] = None) -> MoorePath:
    """
    exp_{gamma(p)}(Gamma(p) K lam alpha(t / (lam a))) over `turns` turns, a = duration of the base.
    K = F_w(0)^-1 when frame_normalized, so the inserted loop starts on the frame Gamma(p).
    """
    if lift.base is None:
        raise ArgumentError("twist insertion needs a lift with a base curve")
    gamma = lift.base
    a = gamma.duration
    T = lam * a
    spt = samples_per_turn or get_settings().samples_per_turn
    x = gamma(p)
    E = lift.at(p)

    scale = T ** np.arange(1, twist.dim + 1)
    Fw0 = (lam * twist.jet(0.0) / scale[:, None]).T
    B = E @ np.linalg.inv(Fw0) if frame_normalized else E

    ts = np.linspace(0.0, turns * T, spt * turns + 1)
    v = (lam * twist.position(ts / T)) @ B.T
    bp = BasisPoint(x, gamma.basepoint.frame)
    if not closed:
        pts = x + v if M.is_flat else exp_map(M, x, v)
        return fit_curve(M, ts, pts, basepoint=bp, density=spt / T)
    if M.is_flat:
        jet = (B @ Fw0).T
        return fit_curve(M, ts, x + v, jets=(jet, jet), closed=True, basepoint=bp, density=spt / T)
    return fit_curve(M, ts, exp_map(M, x, v), closed=True, basepoint=bp, density=spt / T)


@dataclass(frozen=True)
class Insertion:
    """gamma|[0,p1] tw(p1) gamma|[p1,p2] ... tw(pm) gamma|[pm,a] and its parts."""

    path: MoorePath
    positions: Tuple[float, ...]
    pieces: Tuple[MoorePath, ...]
    twists: Tuple[MoorePath, ...]
    lam: float

    @property
    def N(self) -> int:
        return len(self.twists)

    @property
    def max_jump(self) -> float:
        return self.path.max_jump


def insert_twists(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float,
                  positions: Sequence[float], *, turns: int = 1, frame_normalized: bool = False,
                  delta: Optional[float] = None) -> Insertion:
    if lift.base is None:
        raise ArgumentError("twist insertion needs a lift with a base curve")
    gamma = lift.base
    a = gamma.duration
    pos = [float(p) for p in positions]
    if any(q < p - 1e-12 for p, q in zip(pos, pos[1:])) or (pos and (pos[0] < -1e-12 or pos[-1] > a + 1e-12)):
        raise ArgumentError("insertion positions must be nondecreasing inside [0, a]")

    bounds = [0.0] + pos + [a]
    pieces, twists, parts = [], [], []
    for i, p in enumerate(pos):
        piece = restrict(gamma, bounds[i], p)
        tw = twist_at(M, lift, twist, lam, p, turns=turns, frame_normalized=frame_normalized)
        pieces.append(piece)
        twists.append(tw)
        parts += [piece, tw]
    parts.append(restrict(gamma, bounds[-2], a))
    path = concat_all(parts, delta).with_basepoint(gamma.basepoint)
    log.debug("inserted %d twists (lambda=%g, max jump %.3e)", len(twists), lam, path.max_jump)
    return Insertion(path, tuple(pos), tuple(pieces), tuple(twists), lam)


def build_conc_family(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int, *,
                      frame_normalized: bool = False, delta: Optional[float] = None) -> Insertion:
    """One twist after each of the N equal pieces of gamma."""
    if N < 1:
        raise ArgumentError("N must be >= 1")
    a = lift.base.duration
    return insert_twists(M, lift, twist, lam, [i * a / N for i in range(1, N + 1)],
                         frame_normalized=frame_normalized, delta=delta)


def conc_family(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int, **kw) -> MoorePath:
    return build_conc_family(M, lift, twist, lam, N, **kw).path


def slide_homotopy(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int,
                   i: int, tau: float, **kw) -> Insertion:
    """Moves twist i+1 from s_{i+1} back to s_i + tau a / N (tau = 1 is the concentrated family)."""
    if not 0 <= i < N:
        raise ArgumentError("slide index must satisfy 0 <= i < N")
    if not 0.0 <= tau <= 1.0:
        raise ArgumentError("tau must lie in [0, 1]")
    a = lift.base.duration
    pos = [k * a / N for k in range(1, N + 1)]
    pos[i] = i * a / N + tau * a / N
    return insert_twists(M, lift, twist, lam, pos, **kw)


def shrink_homotopy(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int,
                    s: float, *, frame_normalized: bool = True, delta: Optional[float] = None) -> Insertion:
    """Double twists at p_i = 2ia/N + s (a - 2ia/N); s = 1 stacks all of them at the end."""
    if N < 2 or N % 2:
        raise ArgumentError("shrink homotopy needs an even N >= 2")
    if not 0.0 <= s <= 1.0:
        raise ArgumentError("s must lie in [0, 1]")
    a = lift.base.duration
    pos = [2 * i * a / N + s * (a - 2 * i * a / N) for i in range(1, N // 2 + 1)]
    return insert_twists(M, lift, twist, lam, pos, turns=2, frame_normalized=frame_normalized, delta=delta)


def cut_insert_curve(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int,
                     **kw) -> Insertion:
    return shrink_homotopy(M, lift, twist, lam, N, 0.0, **kw)


# ---------------------------- manifold telephone wires ----------------------------

def manifold_wire(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float, N: int,
                  samples_per_turn: Optional[int] = None) -> WireResult:
    """
    exp_{gamma(s)}(lam Gamma(s) alpha(u mod 1)),  u = t / (lam a),  s = a u / N,  t in [0, N lam a].
    Closeness compares the end frames with single twists at gamma(0) and gamma(a) fitted the same way.
    """
    if lift.base is None:
        raise ArgumentError("manifold wires need a lift with a base curve")
    if N < 1:
        raise ArgumentError("N must be >= 1")
    gamma = lift.base
    a = gamma.duration
    T = lam * a
    spt = samples_per_turn or get_settings().samples_per_turn

    ts = np.linspace(0.0, N * T, spt * N + 1)
    u = ts / T
    s = np.minimum(a * u / N, a)
    x = gamma(s)
    v = np.einsum("sij,sj->si", lift.at(s), lam * twist.position(np.mod(u, 1.0)))
    pts = x + v if M.is_flat else exp_map(M, x, v)
    wire = record_frame(fit_curve(M, ts, pts, density=spt / T))

    f0, f1 = end_frames(wire)
    r0 = end_frames(twist_at(M, lift, twist, lam, 0.0, closed=False, samples_per_turn=spt))[0]
    r1 = end_frames(twist_at(M, lift, twist, lam, a, closed=False, samples_per_turn=spt))[1]
    closeness = (safe_closeness(f0, r0), safe_closeness(f1, r1))
    m = nondeg_margin(M, wire)
    log.debug("manifold wire N=%d margin=%.6f closeness=(%.3e, %.3e)", N, m, *closeness)
    return WireResult(N, wire, m, closeness)


def scan_manifold_wire(M: ChartedManifold, lift: FrameCurve, twist: TwistSpec, lam: float,
                       tol: Optional[float] = None, delta: Optional[float] = None,
                       N_max: Optional[int] = None) -> WireResult:
    """Smallest even N whose wire has margin >= tol and both end closenesses <= delta."""
    cfg = get_settings()
    tol = cfg.margin_tol if tol is None else tol
    delta = cfg.delta if delta is None else delta
    N_max = N_max or cfg.n_max
    profile: list[dict] = []
    for N in range(2, N_max + 1, 2):
        res = manifold_wire(M, lift, twist, lam, N)
        profile.append({"N": N, "margin": res.margin, "closeness": max(res.closeness)})
        if res.margin >= tol and max(res.closeness) <= delta:
            log.info("scan_manifold_wire: N=%d margin=%.6f", N, res.margin)
            return WireResult(N, res.path, res.margin, res.closeness, tuple(profile))
    raise ExhaustionError(f"no even N <= {N_max} gives a wire with margin {tol} and closeness {delta}",
                          profile=profile)


def wire_distance(M: ChartedManifold, wire: MoorePath, family: Insertion) -> float:
    """
    Turn-by-turn proxy distance between a wire and a concentrated family of the same N and lambda,
    plus the largest excursion of the base pieces from their insertion points.
    """
    if not family.twists:
        raise ArgumentError("family carries no twists")
    T = family.twists[0].duration
    win = 0.0
    for i, tw in enumerate(family.twists):
        win = max(win, proxy_distance(M, tw, restrict(wire, i * T, (i + 1) * T)))
    base = 0.0
    for piece, p in zip(family.pieces, family.positions):
        if piece.is_neutral:
            continue
        ts = np.linspace(0.0, piece.duration, 65)
        base = max(base, float(np.max(np.linalg.norm(piece(ts) - piece.end_point(), axis=-1))))
    return win + base


# ---------------------------- jump fixture and mollifier ----------------------------

def jump_fixture(twist: TwistSpec, closeness: float = 0.03, order: int = 8,
                 samples: Optional[int] = None) -> MoorePath:
    """
    alpha followed by alpha + c t^2 (1-t)^order e (e the last Frenet direction of F0):
    C^1 at the joint, ends on the frame F0, one frame jump of the requested closeness.
    """
    n = twist.dim
    if order < n + 1:
        raise ArgumentError("order must exceed the dimension")
    if not closeness > 0:
        raise ArgumentError("closeness must be positive")
    M = twist.path.manifold
    F0 = twist.frame
    Q, R = np.linalg.qr(F0)
    e = Q[:, -1] * np.sign(R[-1, -1])

    # j-th derivative of t^2 (1-t)^order at 0
    dq = np.array([0.0] + [math.factorial(j) * math.comb(order, j - 2) * (-1) ** (j - 2) for j in range(2, n + 1)])
    D = np.outer(e, dq)

    def gap(c: float) -> float:
        return safe_closeness(F0, F0 + c * D) - closeness

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise ConstructionError("cannot reach the requested closeness")
    c = brentq(gap, 0.0, hi, xtol=1e-14)

    samples = samples or 2 * get_settings().samples_per_turn
    ts = np.linspace(0.0, 1.0, samples + 1)
    pts = twist.position(ts) + c * (ts ** 2 * (1 - ts) ** order)[:, None] * e
    j0 = twist.jet(0.0) + c * np.outer(dq, e)
    beta = fit_curve(M, ts, pts, jets=(j0, twist.jet(1.0)), basepoint=twist.path.basepoint)
    out = concat(twist.path, beta)
    log.info("jump fixture: c=%.6g closeness=%.4f", c, out.max_jump)
    return out


@dataclass(frozen=True)
class MollifyResult:
    path: MoorePath
    tau: float
    eps2: float
    margin_before: float
    margin_after: float
    jumps_removed: int
    closeness: Tuple[float, float]
    kernel: str = KERNEL


def mollify(gamma: MoorePath, tau: float, gamma0: MoorePath, blend: BlendProfile | float = 0.05,
            density: Optional[float] = None) -> MollifyResult:
    """
    Convolve gamma with a compact bump of half-width tau * a, then blend back onto gamma0 near both
    ends with f_eps, so the result starts and ends on the frame of gamma0.
    """
    blend = blend if isinstance(blend, BlendProfile) else BlendProfile(float(blend))
    if gamma.is_neutral:
        raise PreconditionError("cannot mollify the neutral curve")
    if gamma0.is_neutral or abs(gamma0.duration - 1.0) > 1e-9:
        raise PreconditionError("anchor curve must have duration 1")
    if not 0.0 <= tau < 0.5:
        raise ArgumentError("tau must lie in [0, 0.5)")
    M, n = gamma.manifold, gamma.dim
    a = gamma.duration
    if blend.eps * a > 1.0:
        raise PreconditionError("blend window is longer than the anchor curve")

    m = density or get_settings().grid_density
    count = int(math.ceil(m * a))
    ts = np.linspace(0.0, a, count + 1)
    h = a / count
    X = gamma(ts)

    J = int(math.floor(tau * a / h))
    if J >= 1:
        s = np.arange(-J, J + 1) * h / (tau * a)
        inner = 1.0 - s * s
        w = np.zeros_like(s)
        w[inner > 0] = np.exp(-1.0 / inner[inner > 0])
        w /= w.sum()
        den = convolve(np.ones(len(ts)), w, mode="same")
        S = np.stack([convolve(X[:, i], w, mode="same") for i in range(n)], axis=-1) / den[:, None]
    else:
        S = X

    f = blend(ts / a)[:, None]
    near_start = ts / a <= 0.5
    anchor = np.where(near_start[:, None], gamma0(np.clip(ts, 0.0, 1.0)), gamma0(np.clip(1.0 - a + ts, 0.0, 1.0)))
    Y = (1.0 - f) * S + f * anchor
    Y[0], Y[-1] = gamma0(0.0), gamma0.end_point()

    j0 = np.stack([gamma0(0.0, j) for j in range(1, n + 1)])
    j1 = np.stack([gamma0.left(1.0, j) for j in range(1, n + 1)])
    path = fit_curve(M, ts, Y, jets=(j0, j1), basepoint=gamma0.basepoint, density=m)

    before = min(piece_margins(M, gamma))
    after = nondeg_margin(M, path)
    f0, f1 = end_frames(path)
    ref = gamma0.basepoint.frame
    closeness = (safe_closeness(f0, ref), safe_closeness(f1, ref))
    log.info("mollify: tau=%g eps=%g margin %.6f -> %.6f", tau, blend.eps, before, after)
    if not after > 0:
        raise SmoothingError(f"mollified curve is degenerate (margin {after:.3e}); try a smaller tau")
    return MollifyResult(path, tau, blend.eps, before, after, len(gamma.jumps), closeness)
