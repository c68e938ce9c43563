# tests/test_curve.py
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from common.errors import ArgumentError, DegeneracyError, JumpError, MismatchError, SmoothnessError
from geometry.curve import (
    FrameCurve,
    MoorePath,
    affine_image,
    concat,
    covariant_derivatives,
    end_frames,
    fit_curve,
    frame_closeness,
    frame_map,
    frenet,
    in_LMdelta,
    load_curve,
    nondeg_margin,
    power,
    proxy_distance,
    record_frame,
    rescale_time,
    restrict,
    safe_closeness,
)
from geometry.manifold import ChartedManifold, geodesic
from tests.shapes import FIXTURES, circle

R2 = ChartedManifold.euclidean(2)
R3 = ChartedManifold.euclidean(3)


def _shear(eps: float) -> np.ndarray:
    return np.array([[1.0, eps], [0.0, 1.0]])


def test_circle_margin_is_one():
    assert nondeg_margin(R2, circle(R2, 0.7)) == pytest.approx(1.0, abs=1e-6)


def test_segment_fixture_is_degenerate():
    gamma = load_curve(FIXTURES / "segment.json")
    assert nondeg_margin(gamma.manifold, gamma) == 0.0
    report = in_LMdelta(gamma.manifold, gamma, 0.05)
    assert not report.ok
    assert "margin: piece 0 is degenerate" in report.failures


def test_neutral_curve():
    e = MoorePath.neutral(R2)
    c = circle(R2)
    assert e.is_neutral and e.duration == 0.0
    assert nondeg_margin(R2, e) == 1.0
    assert concat(e, c) is c and concat(c, e) is c
    assert power(c, 0).is_neutral
    assert in_LMdelta(R2, e, 0.01).ok


def test_margin_needs_enough_smoothness():
    ts = np.linspace(0.0, 1.0, 20)
    cubic = fit_curve(R3, ts, np.stack([ts, ts ** 2, ts ** 3], axis=-1), degree=3)
    with pytest.raises(SmoothnessError):
        nondeg_margin(R3, cubic)


def test_concat_durations_and_jumps(twist2):
    a = twist2.path
    sheared = affine_image(a, _shear(0.1))
    both = concat(a, sheared)
    assert both.duration == pytest.approx(2.0)
    assert both.joints == [pytest.approx(1.0)]
    assert len(both.jumps) == 1
    t, c = both.jumps[0]
    assert t == pytest.approx(1.0)
    assert c == pytest.approx(safe_closeness(end_frames(a)[1], end_frames(sheared)[0]))
    with pytest.raises(JumpError) as e:
        concat(a, sheared, delta=0.05)
    assert e.value.closeness == pytest.approx(c)


def test_concat_needs_matching_endpoints():
    c = circle(R2)
    moved = affine_image(c, np.eye(2), np.array([0.5, 0.0]))
    with pytest.raises(MismatchError):
        concat(c, moved)


def test_power_is_jump_free():
    c = circle(R2)
    c3 = power(c, 3)
    assert c3.duration == pytest.approx(3.0)
    assert c3.jumps == ()
    assert in_LMdelta(R2, record_frame(c3), 0.01).ok


def test_left_limits_at_joints():
    c = circle(R2)
    big = affine_image(c, 2.0 * np.eye(2), np.array([-1.0, 0.0]))
    both = concat(c, big)
    assert np.allclose(both.left(1.0), [1.0, 0.0])
    assert np.allclose(both.left(1.0, 1), c.left(1.0, 1))
    assert np.allclose(both(1.0, 1), 2.0 * c(0.0, 1))


def test_restrict_keeps_end_frames():
    c = circle(R2)
    piece = restrict(c, 0.2, 0.7)
    assert piece.duration == pytest.approx(0.5)
    f0, f1 = end_frames(piece)
    assert np.allclose(f0, np.stack([c(0.2, 1), c(0.2, 2)], axis=-1), rtol=1e-7, atol=1e-7)
    assert np.allclose(f1, np.stack([c(0.7, 1), c(0.7, 2)], axis=-1), rtol=1e-7, atol=1e-7)
    assert restrict(c, 0.3, 0.3).is_neutral


@pytest.mark.parametrize("u0, u1", [(0.1, 0.7), (1 / 3, 2 / 3), (0.0, 1.0 - 1e-13), (0.9, 1.0)])
def test_restrict_with_inexact_bounds(u0, u1):
    c = circle(R2, samples=37)
    piece = restrict(c, u0, u1)
    ends = piece(np.array([0.0, piece.duration]))
    assert np.allclose(ends, c(np.array([u0, u1])), atol=1e-9)
    t = np.linspace(0.0, piece.duration, 23)
    assert np.allclose(piece(t), c(t + u0), atol=1e-7)


def test_restrict_across_a_joint_keeps_the_jump(twist2):
    both = concat(twist2.path, affine_image(twist2.path, _shear(0.1)))
    piece = restrict(both, 0.5, 1.5)
    assert len(piece.segments) == 2
    assert piece.jumps[0][0] == pytest.approx(0.5)
    assert piece.jumps[0][1] == pytest.approx(both.jumps[0][1])


def test_frame_map_keeps_both_sides_of_a_joint(twist2):
    both = concat(twist2.path, affine_image(twist2.path, _shear(0.1)))
    F = frame_map(R2, both)
    dup = np.flatnonzero(np.diff(F.times) == 0)
    assert len(dup) == 1
    i = dup[0]
    assert safe_closeness(F.frames[i], F.frames[i + 1]) == pytest.approx(both.jumps[0][1], rel=1e-6)


def test_covariant_acceleration_of_a_geodesic_vanishes():
    M = ChartedManifold.sphere(3)
    s, xs, _ = geodesic(M, np.array([0.2, 0.1, -0.1]), np.array([0.4, -0.3, 0.2]), steps=256)
    gamma = fit_curve(M, s, xs)
    _, (V1, V2) = covariant_derivatives(M, gamma, 2)
    D2 = gamma(np.linspace(0.0, 1.0, 50), 2)
    assert np.max(np.linalg.norm(V2, axis=-1)) < 1e-5 * max(1.0, np.max(np.linalg.norm(D2, axis=-1)))


def test_covariant_derivatives_are_cached():
    M = ChartedManifold.hyperbolic(2)
    c = circle(M, 0.3)
    _, first = covariant_derivatives(M, c, 2)
    cache = c.segments[0].cache
    assert len(cache) == 1
    _, again = covariant_derivatives(M, c, 2)
    assert len(cache) == 1
    assert np.array_equal(first[1], again[1])


def test_frame_closeness():
    L = np.array([[2.0, 1.0], [0.0, 1.0]])
    assert frame_closeness(L, L) == 0.0
    assert frame_closeness(L, 2 * L) == frame_closeness(2 * L, L)
    assert frame_closeness(np.eye(2), 2 * np.eye(2)) == pytest.approx(math.sqrt(2))
    with pytest.raises(ArgumentError):
        frame_closeness(np.zeros((2, 2)), L)
    assert safe_closeness(np.zeros((2, 2)), L) == math.inf


def test_frenet_is_special_orthogonal(twist3):
    F = frenet(frame_map(R3, twist3.path))
    Q = F.frames
    assert np.allclose(np.swapaxes(Q, -1, -2) @ Q, np.eye(3), atol=1e-10)
    assert np.allclose(np.linalg.det(Q), 1.0)
    t1 = twist3.path(F.times, 1)
    assert np.allclose(Q[:, :, 0], t1 / np.linalg.norm(t1, axis=-1, keepdims=True))


def test_frenet_rejects_degenerate_frames():
    gamma = load_curve(FIXTURES / "segment.json")
    with pytest.raises(DegeneracyError):
        frenet(frame_map(R2, gamma))


def test_frame_curve_concat_and_rescale():
    F = FrameCurve(np.array([0.0, 1.0]), np.stack([np.eye(2), np.eye(2)]))
    G = F.concat(F.transform(left=2 * np.eye(2)))
    assert G.duration == pytest.approx(2.0)
    assert len(G.jumps) == 1
    assert G.rescaled(1.0).jumps[0][0] == pytest.approx(0.5)
    assert np.allclose(G.at(1.5), 2 * np.eye(2))
    assert np.allclose(G.at(0.5), np.eye(2))


def test_proxy_distance_sees_through_reparametrization():
    c = circle(R2)
    assert proxy_distance(R2, c, c) < 1e-9
    assert proxy_distance(R2, c, rescale_time(c, 2.0)) < 1e-6
    assert proxy_distance(R2, c, affine_image(c, 1.1 * np.eye(2))) > 0.1


def test_lm_membership_of_a_recorded_circle():
    c = record_frame(circle(R2))
    report = in_LMdelta(R2, c, 0.0)
    assert report.ok, report.failures
    assert report.margin == pytest.approx(1.0, abs=1e-6)


def test_margin_follows_the_initial_orientation():
    clockwise = affine_image(circle(R2, 0.7), np.diag([1.0, -1.0]))
    assert nondeg_margin(R2, clockwise) == pytest.approx(1.0, abs=1e-6)

    # curvature changes sign twice, so the frame turns over between grid points
    ts = np.linspace(0.0, 1.0, 257)
    th = 2 * math.pi * ts + 0.3
    eight = fit_curve(R2, ts, np.stack([np.sin(th), 0.5 * np.sin(2 * th)], axis=-1))
    assert nondeg_margin(R2, eight) == 0.0


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0.0, 2 * math.pi), scale=st.floats(0.5, 2.0))
def test_margin_is_similarity_invariant(twist2, theta, scale):
    L = scale * np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    moved = affine_image(twist2.path, L)
    assert nondeg_margin(R2, moved) == pytest.approx(twist2.margin, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(factor=st.floats(0.25, 4.0))
def test_margin_is_time_scale_invariant(factor):
    c = circle(R2, 0.5)
    assert nondeg_margin(R2, rescale_time(c, factor)) == pytest.approx(nondeg_margin(R2, c), abs=1e-6)
