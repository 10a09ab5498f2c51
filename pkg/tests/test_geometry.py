import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmcover import geometry
from swarmcover.errors import DegeneratePosition, InvalidParameter
from swarmcover.geometry import Obstacle

RECT = Obstacle.rect((0.0, 0.0), 4.0, 2.0)


def test_boundary_angle_examples():
    assert geometry.boundary_angle(Obstacle.rect((0, 0), 4, 2), (5, 0)) == 0.0
    assert geometry.boundary_angle(Obstacle.circle((1, 1), 1), (1, 4)) == pytest.approx(math.pi / 2)
    assert geometry.boundary_angle(RECT, (-3, 0)) == pytest.approx(math.pi)


def test_boundary_angle_range_excludes_minus_pi():
    # atan2 gives -pi for (-x, -0.0); the contract range is (-pi, pi]
    assert geometry.boundary_angle(RECT, (-3.0, -0.0)) == pytest.approx(math.pi)


def test_degenerate_position():
    with pytest.raises(DegeneratePosition):
        geometry.boundary_angle(RECT, (0.0, 0.0))
    with pytest.raises(DegeneratePosition):
        geometry.unit_normal(Obstacle.circle((1, 1), 2), (1.0, 1.0))


def test_boundary_radius_examples():
    assert geometry.boundary_radius(RECT, (5, 0)) == pytest.approx(2.0)
    assert geometry.boundary_radius(RECT, (0, 5)) == pytest.approx(1.0)
    assert geometry.boundary_radius(RECT, (3, 3)) == pytest.approx(math.sqrt(2))
    assert geometry.boundary_radius(Obstacle.circle((0, 0), 2), (-7, 3)) == 2.0


def test_unit_normal_examples():
    np.testing.assert_array_equal(geometry.unit_normal(RECT, (5, 0.1)), [1, 0])
    np.testing.assert_array_equal(geometry.unit_normal(RECT, (0, 5)), [0, 1])
    np.testing.assert_array_equal(geometry.unit_normal(RECT, (0, -5)), [0, -1])
    np.testing.assert_array_equal(geometry.unit_normal(RECT, (-5, 0.1)), [-1, 0])
    np.testing.assert_allclose(geometry.unit_normal(Obstacle.circle((1, 1), 1), (4, 5)), [0.6, 0.8], atol=1e-15)


def test_rect_sector_edges_are_half_open():
    tbar = RECT.corner_angle
    at = lambda th: (10 * math.cos(th), 10 * math.sin(th))  # noqa: E731
    # -tbar <= theta < tbar is the right face
    np.testing.assert_array_equal(geometry.unit_normal(RECT, at(-tbar)), [1, 0])
    assert not np.array_equal(geometry.unit_normal(RECT, at(tbar)), [1, 0])


def test_boundary_point_examples():
    np.testing.assert_allclose(geometry.boundary_point(RECT, (5, 0)), [2, 0], atol=1e-12)
    np.testing.assert_allclose(geometry.boundary_point(Obstacle.circle((0, 0), 2), (3, 0)), [2, 0], atol=1e-12)
    np.testing.assert_allclose(geometry.boundary_point(RECT, (3, 3)), [1, 1], atol=1e-12)


def test_contains_examples():
    assert geometry.contains(Obstacle.circle((0, 0), 2), (1, 0))
    assert geometry.contains(RECT, (2.0, 1.0))
    assert not geometry.contains(RECT, (2.5, 0))


def test_invalid_dimensions():
    with pytest.raises(InvalidParameter):
        Obstacle.circle((0, 0), 0.0)
    with pytest.raises(InvalidParameter):
        Obstacle.rect((0, 0), 1.0, -1.0)


def test_branches_agree_at_corner_angle():
    for L, W in [(4, 2), (1, 7), (3, 3), (0.1, 50)]:
        obs = Obstacle.rect((0, 0), L, W)
        tbar = obs.corner_angle
        half_diag = 0.5 * math.hypot(L, W)
        for th in (tbar, -tbar, math.pi - tbar, -(math.pi - tbar)):
            r_tb, r_lr = geometry._face_radii(obs, th)
            assert r_tb == pytest.approx(half_diag, abs=1e-9)
            assert r_lr == pytest.approx(half_diag, abs=1e-9)


coord = st.floats(-50, 50, allow_nan=False)
size = st.floats(0.1, 20)


@st.composite
def obstacles(draw):
    c = (draw(coord), draw(coord))
    if draw(st.booleans()):
        return Obstacle.circle(c, draw(size))
    return Obstacle.rect(c, draw(size), draw(size))


@st.composite
def obstacle_and_point(draw):
    obs = draw(obstacles())
    y = np.array([draw(coord), draw(coord)])
    if np.hypot(*(y - obs.p)) < 1e-6:
        y = obs.p + np.array([1.0, 0.5])
    return obs, y


@settings(max_examples=300)
@given(obstacle_and_point())
def test_normal_is_unit_and_boundary_point_on_boundary(case):
    obs, y = case
    geo = geometry.boundary_geometry(obs, y)
    assert abs(np.linalg.norm(geo.n_hat) - 1.0) <= 1e-12
    b = geo.boundary_point - obs.p
    if obs.kind == geometry.CIRCLE:
        assert abs(np.linalg.norm(b) - obs.radius) <= 1e-12 * max(1.0, obs.radius)
        d = y - obs.p
        assert float(geo.n_hat @ d) == pytest.approx(np.linalg.norm(d), rel=1e-12)
    else:
        scaled = max(abs(b[0]) / (obs.length / 2), abs(b[1]) / (obs.width / 2))
        assert scaled == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=300)
@given(obstacle_and_point())
def test_radius_comparison_matches_contains(case):
    obs, y = case
    dist = geometry.distance_to_center(obs, y)
    r = geometry.boundary_radius(obs, y)
    if abs(dist - r) > 1e-9:
        assert geometry.contains(obs, y) == (dist < r)
