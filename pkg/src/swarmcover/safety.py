"""Barrier-function safety filter and a potential-field baseline.

Two barriers per obstacle are enforced ``P`` steps ahead, where ``P`` is
the output relative degree of the plant:

* a position barrier ``||y - p_o||^2 - r_o^2``;
* a velocity barrier that adds ``K_v <n_hat, v_prev> / D`` so the admissible
  approach speed shrinks to zero at the boundary.

Boundary radius and normal are frozen at ``y_frozen`` (the output one step
before the horizon), which the current input cannot move, so every
constraint is an explicit convex function of the current input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from . import geometry, qp
from .dynamics import LinearModel, ModelLimits, clamp_input, output_maps
from .errors import BoundaryDenominator, InvalidParameter, UnsafeState
from .geometry import Obstacle

SQP_MAX_ITER = 10
FALLBACK_GRID = 41
FEAS_TOL = 1e-9
# linearized constraints aim slightly inside the exact set to absorb rounding
LIN_MARGIN = 1e-9


@dataclass(frozen=True)
class CbfParams:
    K_v: float = 5.0
    eps_den: float = 1e-6
    use_h2: bool = True

    def __post_init__(self):
        if not self.K_v >= 0:
            raise InvalidParameter("K_v must be nonnegative")
        if not self.eps_den > 0:
            raise InvalidParameter("eps_den must be positive")


class FilterStatus(str, Enum):
    UNMODIFIED = "unmodified"
    MODIFIED = "modified"
    MINIMAL_VIOLATION = "minimal_violation"


class FilterResult(NamedTuple):
    u_filtered: np.ndarray
    status: FilterStatus
    worst_h: float


def _denominator(obs: Obstacle, y_prev, geo: geometry.BoundaryGeometry) -> float:
    offset = np.asarray(y_prev, dtype=float)[:2] - obs.p
    dist = float(np.hypot(*offset))
    return (dist - geo.r_o) / dist * float(geo.n_hat @ offset)


def h1(obs: Obstacle, y, y_prev) -> float:
    r = geometry.boundary_radius(obs, y_prev)
    d = np.asarray(y, dtype=float)[:2] - obs.p
    return float(d @ d - r * r)


def h2(obs: Obstacle, y, y_prev, v_prev, params: CbfParams = CbfParams()) -> float:
    geo = geometry.boundary_geometry(obs, y_prev)
    d = np.asarray(y, dtype=float)[:2] - obs.p
    base = float(d @ d - geo.r_o**2)
    vel = float(geo.n_hat @ np.asarray(v_prev, dtype=float)[:2])
    D = _denominator(obs, y_prev, geo)
    if D < params.eps_den and params.K_v * vel < 0:
        raise BoundaryDenominator(
            f"obstacle {obs.id}: denominator {D:.3g} at previous position with approaching velocity"
        )
    return base + params.K_v * vel / max(params.eps_den, D)


def admissible_approach_speed(obs: Obstacle, y, params: CbfParams = CbfParams()) -> float:
    """Largest speed toward the obstacle (along the normal) keeping h2 >= 0 at a standstill position."""
    geo = geometry.boundary_geometry(obs, y)
    d = np.asarray(y, dtype=float) - obs.p
    base = float(d @ d - geo.r_o**2)
    D = _denominator(obs, y, geo)
    if base < 0 or D <= 0:
        return 0.0
    if params.K_v == 0:
        return math.inf
    return base * D / params.K_v


@dataclass(frozen=True, eq=False)
class SafetyProblem:
    """Constraint data for one filtering step.

    Per obstacle ``i`` the frozen geometry gives ``centers[i]``,
    ``radii[i]``, ``normals[i]`` and the velocity-barrier denominator
    ``denoms[i]``. Horizon outputs are affine in the input:
    ``y_pred = y0 + G u`` and ``v_frozen = v0 + F u``.
    """

    y0: np.ndarray
    G: np.ndarray
    y_frozen: np.ndarray
    v0: np.ndarray
    F: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    normals: np.ndarray
    denoms: np.ndarray
    obstacle_ids: tuple
    u_max: np.ndarray

    @property
    def n_obstacles(self) -> int:
        return len(self.radii)

    def _weights(self, params: CbfParams) -> np.ndarray:
        """Velocity-term coefficient per constraint (zero for position barriers)."""
        s = params.K_v / np.maximum(params.eps_den, self.denoms)
        if params.use_h2:
            return np.concatenate([np.zeros(self.n_obstacles), s])
        return np.zeros(self.n_obstacles)

    def _expand(self, params: CbfParams):
        k = 2 if params.use_h2 else 1
        return (
            np.tile(self.centers, (k, 1)),
            np.tile(self.radii**2, k),
            np.tile(self.normals, (k, 1)),
            self._weights(params),
        )

    def constraint_values(self, U, params: CbfParams) -> np.ndarray:
        """Constraint values for a batch of inputs, shape ``(len(U), n_constraints)``.

        Columns are all position barriers followed (if enabled) by all
        velocity barriers, in obstacle order.
        """
        U = np.atleast_2d(np.asarray(U, dtype=float))
        c, r2, n, s = self._expand(params)
        Y = self.y0 + U @ self.G.T
        V = self.v0 + U @ self.F.T
        diff = Y[:, None, :] - c[None, :, :]
        return (diff**2).sum(axis=-1) - r2 + s * (V @ n.T)

    def constraint_gradients(self, u, params: CbfParams) -> np.ndarray:
        c, _, n, s = self._expand(params)
        y = self.y0 + self.G @ u
        return 2.0 * (y - c) @ self.G + s[:, None] * (n @ self.F)

    def constraint_labels(self, params: CbfParams) -> list[str]:
        labels = [f"h1[{i}]" for i in self.obstacle_ids]
        if params.use_h2:
            labels += [f"h2[{i}]" for i in self.obstacle_ids]
        return labels


def dynamic_obstacles(centers: Sequence, radius: float = 5.0, start_id: int = 1000) -> list[Obstacle]:
    """Circular keep-out regions around other agents' current positions."""
    return [Obstacle.circle(c, radius, id=start_id + k) for k, c in enumerate(centers)]


def build_problem(
    model: LinearModel,
    limits: ModelLimits,
    x,
    P: int,
    obstacles: Sequence[Obstacle],
    dynamic: Sequence[Obstacle] = (),
) -> SafetyProblem:
    maps = output_maps(model, x, P)
    obs_all = list(obstacles) + list(dynamic)
    centers, radii, normals, denoms, ids = [], [], [], [], []
    for obs in obs_all:
        geo = geometry.boundary_geometry(obs, maps.y_frozen)
        dist = geometry.distance_to_center(obs, maps.y_frozen)
        if not dist > geo.r_o:
            raise UnsafeState(
                f"predicted output {maps.y_frozen} is not strictly outside obstacle {obs.id}"
            )
        centers.append(obs.p)
        radii.append(geo.r_o)
        normals.append(geo.n_hat)
        denoms.append(_denominator(obs, maps.y_frozen, geo))
        ids.append(obs.id)
    return SafetyProblem(
        y0=maps.y0,
        G=maps.G,
        y_frozen=maps.y_frozen,
        v0=maps.v0,
        F=maps.F,
        centers=np.array(centers).reshape(-1, 2),
        radii=np.array(radii, dtype=float),
        normals=np.array(normals).reshape(-1, 2),
        denoms=np.array(denoms, dtype=float),
        obstacle_ids=tuple(ids),
        u_max=np.asarray(limits.u_max, dtype=float),
    )


def _worst(problem: SafetyProblem, u, params: CbfParams) -> float:
    if problem.n_obstacles == 0:
        return math.inf
    return float(problem.constraint_values(u, params).min())


def _sqp(problem: SafetyProblem, u_nom, u_start, params: CbfParams) -> np.ndarray | None:
    """Sequential linearization from ``u_start``; returns the last exact-feasible iterate."""
    A_box, b_box = qp.box_rows(problem.u_max)
    u = np.asarray(u_start, dtype=float)
    best = None
    for _ in range(SQP_MAX_ITER):
        vals = problem.constraint_values(u, params)[0]
        grads = problem.constraint_gradients(u, params)
        # convex constraints: the tangent half-plane lies inside the exact set
        A = np.vstack([grads, A_box])
        b = np.concatenate([LIN_MARGIN - vals + grads @ u, b_box])
        nxt = qp.project(u_nom, A, b)
        if nxt is None:
            break
        if _worst(problem, nxt, params) >= -FEAS_TOL:
            best = nxt
        if np.linalg.norm(nxt - u) <= 1e-12 * (1.0 + np.linalg.norm(u)):
            break
        u = nxt
    return best


def _grid(u_max: np.ndarray, n: int) -> np.ndarray:
    axes = [np.linspace(-b, b, n) for b in u_max]
    g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.stack([g0.ravel(), g1.ravel()], axis=1)


def filter_input(problem: SafetyProblem, u_nom, params: CbfParams = CbfParams()) -> FilterResult:
    """Minimal-deviation input satisfying every barrier at the horizon."""
    u_nom = np.asarray(u_nom, dtype=float)
    if problem.n_obstacles == 0:
        return FilterResult(u_nom.copy(), FilterStatus.UNMODIFIED, math.inf)
    worst_nom = _worst(problem, u_nom, params)
    if worst_nom >= 0:
        return FilterResult(u_nom.copy(), FilterStatus.UNMODIFIED, worst_nom)

    u = _sqp(problem, u_nom, u_nom, params)
    if u is not None:
        return FilterResult(u, FilterStatus.MODIFIED, _worst(problem, u, params))

    grid = _grid(problem.u_max, FALLBACK_GRID)
    worst = problem.constraint_values(grid, params).min(axis=1)
    dev = ((grid - u_nom) ** 2).sum(axis=1)
    feasible = worst >= 0
    if np.any(feasible):
        k = np.flatnonzero(feasible)[np.argmin(dev[feasible])]
        refined = _sqp(problem, u_nom, grid[k], params)
        u = grid[k] if refined is None or np.sum((refined - u_nom) ** 2) > dev[k] else refined
        return FilterResult(u, FilterStatus.MODIFIED, _worst(problem, u, params))
    # lexicographic: least violation first, then closeness to nominal
    k = np.lexsort((dev, -worst))[0]
    return FilterResult(grid[k].copy(), FilterStatus.MINIMAL_VIOLATION, float(worst[k]))


@dataclass(frozen=True)
class ApfGains:
    k_rep: float = 50.0
    d_0: float = 5.0
    torque_per_force: float = 1.0

    def __post_init__(self):
        if not self.d_0 > 0:
            raise InvalidParameter("d_0 must be positive")


def repulsive_force(obs: Obstacle, y, gains: ApfGains) -> np.ndarray:
    """Classic inverse-distance repulsion from the boundary point along the center ray."""
    if geometry.distance_to_center(obs, y) < geometry.DEGENERATE_TOL:
        return np.zeros(2)
    geo = geometry.boundary_geometry(obs, y)
    d = float(np.hypot(*(np.asarray(y, dtype=float) - geo.boundary_point)))
    if geometry.contains(obs, y):
        d = min(d, 1e-3)
    if d >= gains.d_0:
        return np.zeros(2)
    d = max(d, 1e-3)
    return gains.k_rep * (1.0 / d - 1.0 / gains.d_0) / (d * d) * geo.n_hat


def apf_filter(
    obstacles: Sequence[Obstacle],
    dynamic: Sequence[Obstacle],
    y,
    v,
    u_nom,
    gains: ApfGains,
    limits: ModelLimits | None = None,
) -> np.ndarray:
    """Nominal input plus summed repulsion mapped onto the torque channels."""
    force = np.zeros(2)
    for obs in list(obstacles) + list(dynamic):
        force += repulsive_force(obs, y, gains)
    u = np.asarray(u_nom, dtype=float) + gains.torque_per_force * force
    return clamp_input(limits, u) if limits is not None else u
