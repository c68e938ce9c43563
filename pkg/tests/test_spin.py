# tests/test_spin.py
import math

import numpy as np
import pytest

from common.errors import ArgumentError, PreconditionError, ResolutionError
from geometry.construct import rotation_loop
from geometry.curve import FrameCurve, MoorePath, power
from geometry.manifold import ChartedManifold
from geometry.spin import Rotor, curve_class, loop_class, rotor_step
from tests.shapes import circle

R2 = ChartedManifold.euclidean(2)
R3 = ChartedManifold.euclidean(3)


def _rz(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# -------- rotors ----------

def test_identity_step():
    R = rotor_step(np.eye(3), np.eye(3))
    assert R.scalar == pytest.approx(1.0)
    assert R.residual < 1e-12


def test_rotor_sign_convention():
    theta = 0.3
    R = rotor_step(np.eye(3), _rz(theta))
    assert R.scalar == pytest.approx(math.cos(theta / 2))
    assert R.coefficient(0, 1) == pytest.approx(-math.sin(theta / 2))
    assert np.allclose(R.matrix(), _rz(theta), atol=1e-12)
    assert (R * R.reversed()).scalar == pytest.approx(1.0)
    assert R.norm2() == pytest.approx(1.0)


def test_step_is_relative_to_the_previous_frame():
    R = rotor_step(_rz(1.0), _rz(1.2))
    assert R.scalar == pytest.approx(math.cos(0.1))


def test_large_steps_are_refused():
    with pytest.raises(ResolutionError):
        rotor_step(np.eye(3), _rz(2.0))


def test_clifford_tables_are_bounded():
    with pytest.raises(ArgumentError):
        rotor_step(np.eye(9), np.eye(9))
    assert Rotor.identity(4).coefficients.shape == (8,)


# -------- loop classes ----------

def test_constant_loop_is_trivial():
    ts = np.linspace(0.0, 1.0, 33)
    F = FrameCurve(ts, np.broadcast_to(np.eye(3), (33, 3, 3)))
    assert loop_class(F).value == 1
    assert loop_class(FrameCurve(np.zeros(0), np.zeros((0, 3, 3)))).value == 1


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("turns, expected", [(1.0, -1), (2.0, 1), (3.0, -1)])
def test_rotation_loops(n, turns, expected):
    res = loop_class(rotation_loop(n, turns))
    assert res.value == expected
    assert res.residual < 1e-6


def test_class_is_stable_under_grid_halving():
    fine = loop_class(rotation_loop(3, 1.0, density=2048))
    coarse = loop_class(rotation_loop(3, 1.0, density=1024))
    assert fine.value == coarse.value == -1


def test_open_loop_is_refused():
    with pytest.raises(PreconditionError):
        loop_class(rotation_loop(3, 0.5))


def test_general_linear_loops_are_retracted():
    A = rotation_loop(3, 1.0)
    scaled = FrameCurve(A.times, 2.0 * A.frames)
    assert loop_class(scaled).value == -1


# -------- closed curves ----------

def test_circle_and_its_square():
    c = circle(R2)
    assert curve_class(R2, c).value == -1
    assert curve_class(R2, power(c, 2)).value == 1
    assert curve_class(R2, MoorePath.neutral(R2)).value == 1


def test_twist_class_does_not_depend_on_the_grid(twist3):
    assert curve_class(R3, twist3.path, 1024).value == curve_class(R3, twist3.path, 2048).value
    assert curve_class(R3, power(twist3.path, 2)).value == 1


def test_space_twist_is_in_the_trivial_class(twist3):
    assert curve_class(R3, twist3.path).value == 1


def _rotation(rng, n: int) -> np.ndarray:
    Q, r = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(r))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def test_classes_multiply_under_concatenation(run_config):
    rng = np.random.default_rng(run_config.seed)
    for _ in range(20):
        n = int(rng.integers(2, 4))
        A, B = (rotation_loop(n, float(rng.integers(0, 4))) for _ in range(2))
        R, S = _rotation(rng, n), _rotation(rng, n)
        A, B = A.transform(left=R, right=R.T), B.transform(left=S, right=S.T)
        assert loop_class(A.concat(B)).value == loop_class(A).value * loop_class(B).value
