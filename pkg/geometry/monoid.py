# geometry/monoid.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence

from common.errors import ArgumentError
from common.logs import get_logger
from geometry.construct import find_wire_N, make_twist, rotation_loop
from geometry.curve import MoorePath, concat, power
from geometry.manifold import ChartedManifold
from geometry.spin import curve_class

log = get_logger("monoid")

Side = Literal["left", "right"]


def omega_multiply(side: Side, gamma: MoorePath, omega: MoorePath, delta: Optional[float] = None) -> MoorePath:
    """omega . gamma (left) or gamma . omega (right)."""
    if side == "left":
        return concat(omega, gamma, delta)
    if side == "right":
        return concat(gamma, omega, delta)
    raise ArgumentError(f"side must be 'left' or 'right', got {side!r}")


@dataclass(frozen=True)
class StabilizedCurve:
    """(curve, k): the class of curve in the k-th stage of the direct limit under omega . (-)."""

    curve: MoorePath
    power: int = 0

    def __post_init__(self):
        if self.power < 0:
            raise ArgumentError("stage must be >= 0")

    def shift(self, omega: MoorePath) -> "StabilizedCurve":
        return StabilizedCurve(omega_multiply("left", self.curve, omega), self.power + 1)

    def advance(self, omega: MoorePath, k: int) -> "StabilizedCurve":
        """Same class, represented at stage power + k."""
        if k < 0:
            raise ArgumentError("k must be >= 0")
        if k == 0:
            return self
        return StabilizedCurve(omega_multiply("left", self.curve, power(omega, k)), self.power + k)


def stabilize(gamma: MoorePath) -> StabilizedCurve:
    return StabilizedCurve(gamma, 0)


def stabilized_equal_pi0(c1: StabilizedCurve, c2: StabilizedCurve, omega: MoorePath) -> bool:
    """
    Equality of frame classes in the localization:
    class(c1) * class(omega)^k2 == class(c2) * class(omega)^k1.
    Only the pi_0 shadow is tested, never homotopy equality.
    """
    M = omega.manifold
    w = curve_class(M, omega).value
    a = curve_class(M, c1.curve).value
    b = curve_class(M, c2.curve).value
    return a * w ** c2.power == b * w ** c1.power


@dataclass(frozen=True)
class CensusResult:
    dim: int
    labels: List[str]
    classes: Dict[str, int]

    @property
    def class_count(self) -> int:
        return len(set(self.classes.values()))

    @property
    def both_classes(self) -> bool:
        return self.class_count == 2

    def partition(self) -> Dict[int, List[str]]:
        out: Dict[int, List[str]] = {}
        for label in self.labels:
            out.setdefault(self.classes[label], []).append(label)
        return out


def pi0_census(n: int, samples: Sequence[MoorePath], labels: Optional[Sequence[str]] = None,
               M: Optional[ChartedManifold] = None) -> CensusResult:
    """Partition closed curves of R^n by their frame class."""
    M = M or ChartedManifold.euclidean(n)
    labels = list(labels) if labels is not None else [f"sample{i}" for i in range(len(samples))]
    if len(labels) != len(samples):
        raise ArgumentError("one label per sample")
    classes: Dict[str, int] = {}
    for label, gamma in zip(labels, samples):
        if gamma.dim != n:
            raise ArgumentError(f"sample {label} lives in dimension {gamma.dim}, expected {n}")
        classes[label] = curve_class(M, gamma).value
        log.debug("census %s -> %+d", label, classes[label])
    res = CensusResult(n, labels, classes)
    log.info("census n=%d: %d samples, %d classes", n, len(labels), res.class_count)
    return res


def standard_samples(n: int) -> Dict[str, MoorePath]:
    """alpha, alpha.alpha and a matrix wire over a full 2 pi rotation."""
    twist = make_twist(n)
    wire = find_wire_N(rotation_loop(n, 1.0), twist.path)
    return {"alpha": twist.path, "alpha2": power(twist.path, 2), f"wire2pi_N{wire.N}": wire.path}
