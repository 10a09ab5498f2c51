"""Discrete-time linear control-affine plants.

The planar quadrotor is two decoupled forward-Euler chains, one per axis:

    p+      = p + dt * dp
    dp+     = dp + dt * g * angle
    angle+  = angle + dt * dangle
    dangle+ = dangle + dt * tau / J

with state layout ``[p_x, dp_x, theta, dtheta, p_y, dp_y, phi, dphi]``
and input ``[tau_x, tau_y]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidHorizon, InvalidParameter, NoRelativeDegree

PX, DPX, THETA, DTHETA, PY, DPY, PHI, DPHI = range(8)

RELATIVE_DEGREE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    H_y: np.ndarray
    H_v: np.ndarray
    dt: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], -1)
        H_y = np.atleast_2d(np.asarray(self.H_y, dtype=float))
        H_v = np.atleast_2d(np.asarray(self.H_v, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise InvalidParameter(f"A must be square, got {A.shape}")
        if H_y.shape[1] != n or H_v.shape[1] != n:
            raise InvalidParameter("output maps must have n columns")
        if H_y.shape != H_v.shape:
            raise InvalidParameter("position and velocity outputs must have the same dimension")
        for name, val in (("A", A), ("B", B), ("H_y", H_y), ("H_v", H_v)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.H_y.shape[0]

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.A, k)


@dataclass(frozen=True, eq=False)
class ModelLimits:
    """Symmetric box limits. Unlimited channels hold ``inf``."""

    u_max: np.ndarray
    x_max: np.ndarray = field(default=None)

    def __post_init__(self):
        u_max = np.asarray(self.u_max, dtype=float).ravel()
        if np.any(~(u_max > 0)):
            raise InvalidParameter("input bounds must be strictly positive")
        object.__setattr__(self, "u_max", u_max)
        if self.x_max is not None:
            x_max = np.asarray(self.x_max, dtype=float).ravel()
            if np.any(~(x_max > 0)):
                raise InvalidParameter("state bounds must be strictly positive")
            object.__setattr__(self, "x_max", x_max)

    @classmethod
    def unbounded(cls, n: int, m: int) -> "ModelLimits":
        return cls(np.full(m, np.inf), np.full(n, np.inf))

    def without_state_limits(self) -> "ModelLimits":
        return ModelLimits(self.u_max, None)


def quadrotor_limits(
    tau_max: float = 10.0,
    speed_max: float = 1.75,
    angle_max_deg: float = 1.5,
    rate_max_deg: float = 15.0,
) -> ModelLimits:
    """Torque, speed, tilt and tilt-rate limits of the planar quadrotor (angles in degrees)."""
    angle = math.radians(angle_max_deg)
    rate = math.radians(rate_max_deg)
    x_max = np.array([np.inf, speed_max, angle, rate, np.inf, speed_max, angle, rate])
    return ModelLimits(np.array([tau_max, tau_max]), x_max)


def build_quadrotor(dt: float = 0.1, g: float = 9.81, J: float = 1.0) -> LinearModel:
    if not (dt > 0 and g > 0 and J > 0):
        raise InvalidParameter(f"dt, g, J must be positive (got {dt}, {g}, {J})")
    chain = np.array(
        [
            [1.0, dt, 0.0, 0.0],
            [0.0, 1.0, dt * g, 0.0],
            [0.0, 0.0, 1.0, dt],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    A = np.zeros((8, 8))
    A[:4, :4] = chain
    A[4:, 4:] = chain
    B = np.zeros((8, 2))
    B[DTHETA, 0] = dt / J
    B[DPHI, 1] = dt / J
    H_y = np.zeros((2, 8))
    H_y[0, PX] = H_y[1, PY] = 1.0
    H_v = np.zeros((2, 8))
    H_v[0, DPX] = H_v[1, DPY] = 1.0
    return LinearModel(A, B, H_y, H_v, dt)


def build_double_integrator(dt: float = 0.1, dim: int = 1) -> LinearModel:
    """Planar or 1-D double integrator with state ``[p, v]`` per axis."""
    A = np.kron(np.eye(dim), np.array([[1.0, dt], [0.0, 1.0]]))
    B = np.kron(np.eye(dim), np.array([[0.0], [dt]]))
    H_y = np.kron(np.eye(dim), np.array([[1.0, 0.0]]))
    H_v = np.kron(np.eye(dim), np.array([[0.0, 1.0]]))
    return LinearModel(A, B, H_y, H_v, dt)


def build_single_integrator(dt: float = 0.1, dim: int = 1) -> LinearModel:
    # velocity output of a single integrator is not a state; report zero
    A = np.eye(dim)
    B = dt * np.eye(dim)
    return LinearModel(A, B, np.eye(dim), np.zeros((dim, dim)), dt)


class StepResult(NamedTuple):
    x: np.ndarray
    saturated: bool


def step(model: LinearModel, limits: ModelLimits | None, x, u) -> StepResult:
    """Advance one step, then saturate limited state channels."""
    x_next = model.A @ np.asarray(x, dtype=float) + model.B @ np.asarray(u, dtype=float)
    if limits is None or limits.x_max is None:
        return StepResult(x_next, False)
    clipped = np.clip(x_next, -limits.x_max, limits.x_max)
    return StepResult(clipped, bool(np.any(clipped != x_next)))


def clamp_input(limits: ModelLimits, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.clip(u, -limits.u_max, limits.u_max)


def relative_degree(model: LinearModel) -> int:
    """Smallest P with H_y A^(P-1) B nonzero."""
    Ak = np.eye(model.n)
    for P in range(1, model.n + 1):
        if np.linalg.norm(model.H_y @ Ak @ model.B) > RELATIVE_DEGREE_TOL:
            return P
        Ak = Ak @ model.A
    raise NoRelativeDegree("input never reaches the position output")


class OutputMaps(NamedTuple):
    """Affine dependence of the horizon outputs on the current input.

    ``y_pred(u) = y0 + G @ u``, ``v_frozen(u) = v0 + F @ u``; ``y_frozen``
    does not depend on ``u``.
    """

    y0: np.ndarray
    G: np.ndarray
    y_frozen: np.ndarray
    v0: np.ndarray
    F: np.ndarray


class Prediction(NamedTuple):
    y_pred: np.ndarray
    y_frozen: np.ndarray
    v_frozen: np.ndarray


def output_maps(model: LinearModel, x, P: int) -> OutputMaps:
    if P < 1:
        raise InvalidHorizon(f"horizon must be >= 1, got {P}")
    x = np.asarray(x, dtype=float)
    A_pm1 = model.power(P - 1)
    y0 = model.H_y @ (A_pm1 @ (model.A @ x))
    G = model.H_y @ A_pm1 @ model.B
    y_frozen = model.H_y @ (A_pm1 @ x)
    v0 = model.H_v @ (A_pm1 @ x)
    if P >= 2:
        F = model.H_v @ model.power(P - 2) @ model.B
    else:
        F = np.zeros((model.p, model.m))
    return OutputMaps(y0, G, y_frozen, v0, F)


def predict_outputs(model: LinearModel, x, P: int, u) -> Prediction:
    maps = output_maps(model, x, P)
    u = np.asarray(u, dtype=float)
    return Prediction(maps.y0 + maps.G @ u, maps.y_frozen, maps.v0 + maps.F @ u)
