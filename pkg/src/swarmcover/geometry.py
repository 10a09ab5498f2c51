"""Circular and axis-aligned rectangular obstacles.

All boundary quantities are measured along the ray from the obstacle
center to the agent position: the angle of that ray, the distance from
the center to where the ray leaves the obstacle, and the outward normal
of the boundary at that exit point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegeneratePosition, InvalidParameter

CIRCLE = "circle"
RECT = "rect"

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class Obstacle:
    """Keep-out region.

    ``length`` is the x-extent and ``width`` the y-extent of a rectangle;
    ``radius`` is only used by circles.
    """

    kind: str
    center: tuple[float, float]
    radius: float = 0.0
    length: float = 0.0
    width: float = 0.0
    id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.kind == CIRCLE:
            if not self.radius > 0:
                raise InvalidParameter(f"circle radius must be positive, got {self.radius}")
        elif self.kind == RECT:
            if not (self.length > 0 and self.width > 0):
                raise InvalidParameter(
                    f"rectangle dimensions must be positive, got {self.length}x{self.width}"
                )
        else:
            raise InvalidParameter(f"unknown obstacle kind {self.kind!r}")

    @classmethod
    def circle(cls, center, radius: float, id: int = 0) -> "Obstacle":
        return cls(CIRCLE, tuple(center), radius=float(radius), id=id)

    @classmethod
    def rect(cls, center, length: float, width: float, id: int = 0) -> "Obstacle":
        return cls(RECT, tuple(center), length=float(length), width=float(width), id=id)

    @property
    def p(self) -> np.ndarray:
        return np.array(self.center)

    @property
    def corner_angle(self) -> float:
        """Angle of the upper-right corner seen from the center (rectangles only)."""
        return math.atan2(self.width, self.length)


class BoundaryGeometry(NamedTuple):
    r_o: float
    n_hat: np.ndarray
    theta: float
    boundary_point: np.ndarray


def _offset(obs: Obstacle, y) -> tuple[float, float]:
    dx = float(y[0]) - obs.center[0]
    dy = float(y[1]) - obs.center[1]
    if math.hypot(dx, dy) < DEGENERATE_TOL:
        raise DegeneratePosition(f"position {tuple(y)} coincides with center of obstacle {obs.id}")
    return dx, dy


def boundary_angle(obs: Obstacle, y) -> float:
    """Counterclockwise angle of ``y - center`` in (-pi, pi]."""
    dx, dy = _offset(obs, y)
    theta = math.atan2(dy, dx)
    if theta == -math.pi:
        theta = math.pi
    return theta


def _face_radii(obs: Obstacle, theta: float) -> tuple[float, float]:
    """Distances to the horizontal-face line and the vertical-face line along ``theta``.

    First entry uses the top/bottom faces (half-width), second the
    left/right faces (half-length).
    """
    c_tb = abs(math.cos(math.pi / 2 - theta))
    c_lr = abs(math.cos(theta))
    r_tb = obs.width / (2.0 * c_tb) if c_tb > 0 else math.inf
    r_lr = obs.length / (2.0 * c_lr) if c_lr > 0 else math.inf
    return r_tb, r_lr


def _radius_at(obs: Obstacle, theta: float) -> float:
    if obs.kind == CIRCLE:
        return obs.radius
    tbar = obs.corner_angle
    r_tb, r_lr = _face_radii(obs, theta)
    if tbar < abs(theta) < math.pi - tbar:
        return r_tb
    return r_lr


def boundary_radius(obs: Obstacle, y) -> float:
    """Distance from the center to the boundary along the ray toward ``y``."""
    return _radius_at(obs, boundary_angle(obs, y))


def _normal_at(obs: Obstacle, theta: float) -> np.ndarray:
    tbar = obs.corner_angle
    if -tbar <= theta < tbar:
        return np.array([1.0, 0.0])
    if tbar <= theta < math.pi - tbar:
        return np.array([0.0, 1.0])
    if tbar - math.pi <= theta < -tbar:
        return np.array([0.0, -1.0])
    return np.array([-1.0, 0.0])


def unit_normal(obs: Obstacle, y) -> np.ndarray:
    if obs.kind == CIRCLE:
        dx, dy = _offset(obs, y)
        d = math.hypot(dx, dy)
        return np.array([dx / d, dy / d])
    return _normal_at(obs, boundary_angle(obs, y))


def boundary_point(obs: Obstacle, y) -> np.ndarray:
    theta = boundary_angle(obs, y)
    r = _radius_at(obs, theta)
    return np.array([obs.center[0] + r * math.cos(theta), obs.center[1] + r * math.sin(theta)])


def boundary_geometry(obs: Obstacle, y) -> BoundaryGeometry:
    """All boundary quantities at once, sharing a single angle evaluation."""
    theta = boundary_angle(obs, y)
    r = _radius_at(obs, theta)
    if obs.kind == CIRCLE:
        n = unit_normal(obs, y)
    else:
        n = _normal_at(obs, theta)
    bp = np.array([obs.center[0] + r * math.cos(theta), obs.center[1] + r * math.sin(theta)])
    return BoundaryGeometry(r, n, theta, bp)


def contains(obs: Obstacle, y) -> bool:
    """True iff ``y`` lies in the closed obstacle region."""
    dx = float(y[0]) - obs.center[0]
    dy = float(y[1]) - obs.center[1]
    if obs.kind == CIRCLE:
        return dx * dx + dy * dy <= obs.radius * obs.radius
    return abs(dx) <= obs.length / 2 and abs(dy) <= obs.width / 2


def distance_to_center(obs: Obstacle, y) -> float:
    return math.hypot(float(y[0]) - obs.center[0], float(y[1]) - obs.center[1])
