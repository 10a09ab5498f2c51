"""Multi-agent coverage episodes.

One step, in order: every agent (re)plans its goal on its own copy of the
field, computes the nominal input, filters it against static obstacles and
the other agents, then all agents move together, drain the sample weights
around their new positions, and merge weights within communication range.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry
from .coverage import (
    ControllerGains,
    PlannerParams,
    SampleField,
    merge_weights,
    nominal_control,
    plan_goal_index,
    update_weights,
)
from .dynamics import (
    DPX,
    DPY,
    PX,
    PY,
    LinearModel,
    ModelLimits,
    build_quadrotor,
    clamp_input,
    quadrotor_limits,
    relative_degree,
    step,
)
from .errors import (
    BoundaryDenominator,
    FieldExhausted,
    InvalidParameter,
    ScenarioInvalid,
    UnsafeState,
    UnstableGains,
)
from .geometry import Obstacle
from .safety import (
    ApfGains,
    CbfParams,
    FilterStatus,
    apf_filter,
    build_problem,
    dynamic_obstacles,
    filter_input,
    h1,
    h2,
)
from .transport import WeightedPoints, wasserstein

FILTER_MODES = ("cbf", "apf", "none")

# per-step statuses beyond the safety filter's own
STATUS_APF = "apf"
STATUS_NONE = "none"
STATUS_TERMINAL = "terminal"


DEFAULT_MAX_POSITION_ERROR = 1.5


def default_gains(model: LinearModel) -> ControllerGains:
    return ControllerGains.lqr(model, max_position_error=DEFAULT_MAX_POSITION_ERROR)


@dataclass
class AgentSpec:
    x0: np.ndarray
    comm_range: float = 100.0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).ravel()

    @classmethod
    def at(cls, position, velocity=(0.0, 0.0), comm_range: float = 100.0) -> "AgentSpec":
        x0 = np.zeros(8)
        x0[PX], x0[PY] = position
        x0[DPX], x0[DPY] = velocity
        return cls(x0, comm_range)


@dataclass
class Scenario:
    agents: list[AgentSpec]
    obstacles: list[Obstacle]
    field: SampleField
    steps: int
    dt: float = 0.1
    g: float = 9.81
    J: float = 1.0
    limits: ModelLimits = field(default_factory=quadrotor_limits)
    planner: PlannerParams = field(default_factory=PlannerParams)
    gains: ControllerGains | None = None
    cbf: CbfParams = field(default_factory=CbfParams)
    apf: ApfGains = field(default_factory=ApfGains)
    filter_mode: str = "cbf"
    inter_agent_radius: float = 5.0
    collision_threshold: float = 5.0
    seed: int = 0
    name: str = "scenario"

    def model(self) -> LinearModel:
        return build_quadrotor(self.dt, self.g, self.J)

    def resolved_gains(self, model: LinearModel | None = None) -> ControllerGains:
        return self.gains if self.gains is not None else default_gains(model or self.model())


@dataclass
class TrajectoryLog:
    """Per-step record; row ``k`` holds the state at step ``k`` and the inputs applied from it.

    The last row (``k == steps``) has no inputs: they are NaN and the
    status is ``"terminal"``.
    """

    states: np.ndarray  # (steps+1, agents, n)
    u_nom: np.ndarray  # (steps+1, agents, m)
    u: np.ndarray  # (steps+1, agents, m)
    status: list[list[str]]  # [steps+1][agents]
    min_h: np.ndarray  # (steps+1, agents)
    weight_hash: list[str] = field(default_factory=list)
    total_weight: np.ndarray | None = None  # (steps+1,)
    final_fields: list[SampleField] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]

    def positions(self) -> np.ndarray:
        return self.states[:, :, [PX, PY]]

    def velocities(self) -> np.ndarray:
        return self.states[:, :, [DPX, DPY]]


@dataclass
class Metrics:
    wasserstein_coverage: float
    min_inter_agent_distance: float | None
    obstacle_violations: int
    minimal_violation_steps: int
    total_weight_remaining: float

    def as_dict(self) -> dict:
        return {
            "wasserstein_coverage": self.wasserstein_coverage,
            "min_inter_agent_distance": self.min_inter_agent_distance,
            "obstacle_violations": self.obstacle_violations,
            "minimal_violation_steps": self.minimal_violation_steps,
            "total_weight_remaining": self.total_weight_remaining,
        }


def validate(scenario: Scenario) -> None:
    """Raise ScenarioInvalid naming the first violated scenario invariant."""
    if scenario.filter_mode not in FILTER_MODES:
        raise ScenarioInvalid(f"filter_mode must be one of {FILTER_MODES}, got {scenario.filter_mode!r}")
    if scenario.steps < 0:
        raise ScenarioInvalid("steps must be nonnegative")
    if not scenario.agents:
        raise ScenarioInvalid("scenario needs at least one agent")
    if len(scenario.field) == 0:
        raise ScenarioInvalid("field has no sample points")
    try:
        model = scenario.model()
        scenario.resolved_gains(model).matrix(model)
    except (InvalidParameter, UnstableGains) as exc:
        raise ScenarioInvalid(f"model/gains: {exc}") from exc
    for a in scenario.agents:
        if a.x0.shape != (model.n,) or not np.all(np.isfinite(a.x0)):
            raise ScenarioInvalid(f"agent initial state must be a finite {model.n}-vector")
    P = relative_degree(model)
    for i, a in enumerate(scenario.agents):
        check_initial_transient(model, scenario.limits, a.x0, P, scenario.obstacles, scenario.cbf, agent=i)
    ys = [model.H_y @ a.x0 for a in scenario.agents]
    for i, j in itertools.combinations(range(len(ys)), 2):
        d = float(np.linalg.norm(ys[i] - ys[j]))
        if not d > scenario.collision_threshold:
            raise ScenarioInvalid(
                f"agents {i} and {j} start {d:.3f} m apart, within the collision threshold "
                f"{scenario.collision_threshold} m"
            )


def check_initial_transient(model, limits, x0, P, obstacles, cbf: CbfParams, agent: int = 0) -> None:
    """The first ``P - 1`` outputs cannot be influenced by any input, so they must already be safe.

    Propagates the free response and requires every output up to the
    input-independent horizon to be strictly outside each obstacle with
    both barriers nonnegative.
    """
    xs = [np.asarray(x0, dtype=float)]
    for _ in range(P - 1):
        xs.append(step(model, limits, xs[-1], np.zeros(model.m)).x)
    ys = [model.H_y @ x for x in xs]
    vs = [model.H_v @ x for x in xs]
    for obs in obstacles:
        for j, y in enumerate(ys):
            try:
                inside = not geometry.distance_to_center(obs, y) > geometry.boundary_radius(obs, y)
            except geometry.DegeneratePosition:
                inside = True
            if inside:
                raise ScenarioInvalid(
                    f"agent {agent}: initial-transient check failed, output at step {j} "
                    f"is inside obstacle {obs.id}"
                )
            if j == 0:
                continue
            try:
                values = (h1(obs, y, ys[j - 1]), h2(obs, y, ys[j - 1], vs[j - 1], cbf))
            except BoundaryDenominator as exc:
                raise ScenarioInvalid(f"agent {agent}: initial-transient check failed: {exc}") from exc
            if min(values) < 0:
                raise ScenarioInvalid(
                    f"agent {agent}: initial-transient check failed, barrier negative at step {j} "
                    f"for obstacle {obs.id}"
                )


def _components(ys: np.ndarray, ranges: Sequence[float]) -> list[list[int]]:
    n = len(ys)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        comp, stack = [], [s]
        seen[s] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if not seen[j] and np.linalg.norm(ys[i] - ys[j]) <= min(ranges[i], ranges[j]):
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def _weights_hash(fields: Sequence[SampleField]) -> str:
    h = hashlib.sha256()
    for f in fields:
        h.update(np.ascontiguousarray(f.weights).tobytes())
    return h.hexdigest()[:16]


def _static_min_h1(obstacles, y, y_prev) -> float:
    vals = []
    for obs in obstacles:
        try:
            vals.append(h1(obs, y, y_prev))
        except geometry.DegeneratePosition:
            vals.append(-math.inf)
    return min(vals) if vals else math.inf


def simulate(scenario: Scenario, validate_first: bool = True) -> TrajectoryLog:
    if validate_first:
        validate(scenario)
    model = scenario.model()
    limits = scenario.limits
    gains = scenario.resolved_gains(model)
    K = gains.matrix(model)
    P = relative_degree(model)
    n_agents = len(scenario.agents)
    steps = scenario.steps
    dt = scenario.dt
    planner = scenario.planner

    states = np.full((steps + 1, n_agents, model.n), np.nan)
    u_nom_log = np.full((steps + 1, n_agents, model.m), np.nan)
    u_log = np.full((steps + 1, n_agents, model.m), np.nan)
    min_h = np.full((steps + 1, n_agents), np.nan)
    status: list[list[str]] = []
    hashes: list[str] = []
    total = np.zeros(steps + 1)

    xs = [a.x0.copy() for a in scenario.agents]
    fields = [scenario.field for _ in range(n_agents)]
    goal_idx: list[int | None] = [None] * n_agents
    goals = [model.H_y @ x for x in xs]
    ranges = [a.comm_range for a in scenario.agents]
    y_prev = [model.H_y @ x for x in xs]

    def record(k):
        for i, x in enumerate(xs):
            states[k, i] = x
            min_h[k, i] = _static_min_h1(scenario.obstacles, model.H_y @ x, y_prev[i])
        hashes.append(_weights_hash(fields))
        total[k] = float(np.min([f.weights for f in fields], axis=0).sum())

    record(0)
    for k in range(steps):
        ys = [model.H_y @ x for x in xs]
        row_status = []
        inputs = []
        for i in range(n_agents):
            f = fields[i]
            gi = goal_idx[i]
            need = gi is None or f.weights[gi] <= 0 or np.linalg.norm(ys[i] - goals[i]) <= planner.goal_tol
            if need:
                try:
                    goal_idx[i] = plan_goal_index(ys[i], f, planner)
                    goals[i] = f.points[goal_idx[i]].copy()
                except FieldExhausted:
                    pass
            u_nom = nominal_control(model, gains, xs[i], goals[i], limits, K)
            others = [ys[j] for j in range(n_agents) if j != i]
            dyn = dynamic_obstacles(others, scenario.inter_agent_radius)
            if scenario.filter_mode == "cbf":
                try:
                    problem = build_problem(model, limits, xs[i], P, scenario.obstacles, dyn)
                    res = filter_input(problem, u_nom, scenario.cbf)
                    u, st = res.u_filtered, res.status.value
                except UnsafeState:
                    # best-effort braking: regulate to the current position
                    u = nominal_control(model, gains, xs[i], ys[i], limits, K)
                    st = FilterStatus.MINIMAL_VIOLATION.value
            elif scenario.filter_mode == "apf":
                u = apf_filter(scenario.obstacles, dyn, ys[i], model.H_v @ xs[i], u_nom, scenario.apf, limits)
                st = STATUS_APF
            else:
                u, st = u_nom, STATUS_NONE
            u = clamp_input(limits, u)
            u_nom_log[k, i] = u_nom
            u_log[k, i] = u
            row_status.append(st)
            inputs.append(u)
        status.append(row_status)

        y_prev = ys
        xs = [step(model, limits, xs[i], inputs[i]).x for i in range(n_agents)]
        new_ys = np.array([model.H_y @ x for x in xs])
        fields = [update_weights(fields[i], new_ys[i], planner, dt) for i in range(n_agents)]
        for comp in _components(new_ys, ranges):
            merged = fields[comp[0]]
            for j in comp[1:]:
                merged = merge_weights(merged, fields[j])
            for j in comp:
                fields[j] = merged
        record(k + 1)

    status.append([STATUS_TERMINAL] * n_agents)
    return TrajectoryLog(
        states=states,
        u_nom=u_nom_log,
        u=u_log,
        status=status,
        min_h=min_h,
        weight_hash=hashes,
        total_weight=total,
        final_fields=list(fields),
    )


def coverage_metric(log: TrajectoryLog, reference: SampleField) -> float:
    """W2 between the uniform distribution over all logged positions and the reference weights."""
    pos = log.positions().reshape(-1, 2)
    if len(pos) == 0:
        raise ValueError("empty log")
    return wasserstein(WeightedPoints.uniform(pos), WeightedPoints(reference.points, reference.weights), 2)


def audit(log: TrajectoryLog, scenario: Scenario) -> Metrics:
    pos = log.positions()
    min_dist = None
    if log.n_agents > 1:
        d = math.inf
        for i, j in itertools.combinations(range(log.n_agents), 2):
            d = min(d, float(np.min(np.linalg.norm(pos[:, i] - pos[:, j], axis=1))))
        min_dist = d
    violations = 0
    for k in range(pos.shape[0]):
        if any(geometry.contains(obs, pos[k, i]) for obs in scenario.obstacles for i in range(log.n_agents)):
            violations += 1
    mv = sum(st == FilterStatus.MINIMAL_VIOLATION.value for row in log.status for st in row)
    if log.final_fields:
        remaining = float(np.min([f.weights for f in log.final_fields], axis=0).sum())
    else:
        remaining = scenario.field.total_weight
    return Metrics(
        wasserstein_coverage=coverage_metric(log, scenario.field),
        min_inter_agent_distance=min_dist,
        obstacle_violations=violations,
        minimal_violation_steps=mv,
        total_weight_remaining=remaining,
    )


def run(scenario: Scenario, seed: int | None = None) -> tuple[TrajectoryLog, Metrics]:
    """Simulate and audit. The core loop is randomness-free; ``seed`` is recorded only."""
    if seed is not None:
        scenario.seed = seed
    log = simulate(scenario)
    return log, audit(log, scenario)
