"""Density-driven coverage: goal planning, weight consumption and weight sharing.

Each agent carries its own copy of the sample field. It repeatedly picks a
goal among nearby high-weight sample points, drives toward it, drains the
weight of points it hovers over, and merges weights with agents in
communication range by taking the element-wise minimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .dynamics import PX, PY, LinearModel, ModelLimits, clamp_input
from .errors import FieldExhausted, FieldMismatch, InvalidParameter, UnstableGains, ZeroWeight


@dataclass(frozen=True, eq=False)
class SampleField:
    points: np.ndarray
    weights: np.ndarray
    version: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        w = np.array(self.weights, dtype=float).ravel()
        if len(pts) != len(w):
            raise InvalidParameter(f"{len(pts)} points but {len(w)} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidParameter("weights must be finite and nonnegative")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def with_weights(self, weights) -> "SampleField":
        # shares the immutable points array
        return replace(self, points=self.points, weights=weights, version=self.version + 1)


@dataclass(frozen=True)
class PlannerParams:
    n_lsp: int = 6
    horizon: int = 3
    discount: float = 0.9
    cov_radius: float = 2.0
    cov_rate: float = 1.0
    goal_tol: float = 1.0

    def __post_init__(self):
        if not self.n_lsp >= self.horizon >= 1:
            raise InvalidParameter("need n_lsp >= horizon >= 1")
        if not 0 < self.discount <= 1:
            raise InvalidParameter("discount must be in (0, 1]")
        if not (self.cov_radius > 0 and self.cov_rate > 0 and self.goal_tol > 0):
            raise InvalidParameter("cov_radius, cov_rate and goal_tol must be positive")


@dataclass(frozen=True)
class ControllerGains:
    """Per-axis state feedback on ``[p - p_goal, dp, angle, dangle]``.

    The same row drives both axes: tau_x from the x chain, tau_y from the
    y chain. ``max_position_error`` caps the norm of the position error fed
    to the law, which bounds the cruise speed to roughly
    ``k_p * max_position_error / k_d``.
    """

    k_p: float
    k_d: float
    k_a: float
    k_r: float
    max_position_error: float = math.inf

    def matrix(self, model: LinearModel) -> np.ndarray:
        """Feedback matrix K (m x n); raises if ``A - B K`` is not Schur stable."""
        if model.n != 8 or model.m != 2:
            raise InvalidParameter("gains are laid out for the planar quadrotor")
        row = np.array([self.k_p, self.k_d, self.k_a, self.k_r])
        K = np.zeros((2, 8))
        K[0, :4] = row
        K[1, 4:] = row
        rho = spectral_radius(model.A - model.B @ K)
        if not rho < 1:
            raise UnstableGains(f"closed-loop spectral radius {rho:.6f} >= 1")
        return K

    @classmethod
    def lqr(cls, model: LinearModel, q_pos=1.0, q_vel=4.0, q_ang=0.0, q_rate=0.0, r=1000.0,
            max_position_error=math.inf):
        """Discrete LQR gains for one axis of the quadrotor chain."""
        A = model.A[:4, :4]
        B = model.B[:4, :1]
        Q = np.diag([q_pos, q_vel, q_ang, q_rate])
        R = np.array([[r]])
        S = scipy.linalg.solve_discrete_are(A, B, Q, R)
        K = np.linalg.solve(R + B.T @ S @ B, B.T @ S @ A).ravel()
        return cls(*(float(k) for k in K), max_position_error=max_position_error)


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def wnd(pos, q, w: float) -> float:
    """Weight-normalized distance ``||pos - q|| / w``."""
    if not w > 0:
        raise ZeroWeight(f"weight must be positive, got {w}")
    return math.hypot(float(pos[0]) - float(q[0]), float(pos[1]) - float(q[1])) / w


def select_lsps(pos, field: SampleField, n_lsp: int) -> list[int]:
    """Indices of the ``n_lsp`` positive-weight points with smallest wnd."""
    live = np.flatnonzero(field.weights > 0)
    if len(live) == 0:
        raise FieldExhausted("all sample weights are zero")
    d = np.hypot(field.points[live, 0] - pos[0], field.points[live, 1] - pos[1])
    score = d / field.weights[live]
    # stable sort on score keeps lower indices first among ties
    order = np.argsort(score, kind="stable")
    return [int(live[k]) for k in order[:n_lsp]]


def sequence_cost(pos, field: SampleField, seq, discount: float) -> float:
    cost = 0.0
    here = pos
    for m, j in enumerate(seq):
        cost += discount**m * wnd(here, field.points[j], field.weights[j])
        here = field.points[j]
    return cost


def plan_goal_index(pos, field: SampleField, params: PlannerParams) -> int:
    """Index of the first point of the cheapest waypoint sequence over the LSPs."""
    lsps = sorted(select_lsps(pos, field, params.n_lsp))
    length = min(params.horizon, len(lsps))
    best_cost, best_seq = math.inf, None
    # permutations of a sorted list come out in lexicographic order
    for seq in itertools.permutations(lsps, length):
        c = sequence_cost(pos, field, seq, params.discount)
        if c < best_cost:
            best_cost, best_seq = c, seq
    return best_seq[0]


def plan_goal(pos, field: SampleField, params: PlannerParams) -> np.ndarray:
    return field.points[plan_goal_index(pos, field, params)].copy()


def goal_state(model: LinearModel, goal) -> np.ndarray:
    x_goal = np.zeros(model.n)
    x_goal[PX], x_goal[PY] = goal[0], goal[1]
    return x_goal


def nominal_control(
    model: LinearModel,
    gains: ControllerGains,
    x,
    goal,
    limits: ModelLimits | None = None,
    K: np.ndarray | None = None,
) -> np.ndarray:
    """``u = -K (x - x_goal)``, clamped when limits are given.

    Pass a precomputed ``K`` to skip rebuilding the feedback matrix.
    """
    if K is None:
        K = gains.matrix(model)
    err = np.asarray(x, dtype=float) - goal_state(model, goal)
    dist = math.hypot(err[PX], err[PY])
    if dist > gains.max_position_error:
        err[[PX, PY]] *= gains.max_position_error / dist
    u = -K @ err
    return clamp_input(limits, u) if limits is not None else u


def update_weights(field: SampleField, pos, params: PlannerParams, dt: float) -> SampleField:
    if not dt > 0:
        raise InvalidParameter("dt must be positive")
    d2 = (field.points[:, 0] - pos[0]) ** 2 + (field.points[:, 1] - pos[1]) ** 2
    near = d2 <= params.cov_radius**2
    w = field.weights.copy()
    w[near] = np.maximum(0.0, w[near] - params.cov_rate * dt)
    return field.with_weights(w)


def merge_weights(mine: SampleField, theirs: SampleField) -> SampleField:
    if mine.points is not theirs.points and not np.array_equal(mine.points, theirs.points):
        raise FieldMismatch("fields have different sample points")
    return replace(
        mine,
        points=mine.points,
        weights=np.minimum(mine.weights, theirs.weights),
        version=max(mine.version, theirs.version) + 1,
    )
