"""Ready-made scenarios: the rectangle-detour case, random safety episodes and the bundled demo."""

from __future__ import annotations

from importlib import resources

import numpy as np

from . import geometry
from .coverage import PlannerParams, SampleField
from .errors import ScenarioInvalid
from .geometry import Obstacle
from .safety import CbfParams
from .sim import AgentSpec, Scenario, validate

DEMO_RESOURCE = "demo_3agent.json"


def detour_scenario(seed: int, use_h2: bool = True, steps: int = 1500) -> Scenario:
    """One agent, a 6 x 10 m rectangle between its start and a cluster of eight sample points.

    The seed jitters the start height and the cluster location.
    """
    rng = np.random.default_rng(seed)
    center = np.array([24.0, 6.0]) + rng.uniform(-1.0, 1.0, 2)
    points = center + rng.uniform(-2.0, 2.0, (8, 2))
    start = (0.0, -2.0 + rng.uniform(-1.0, 1.0))
    return Scenario(
        agents=[AgentSpec.at(start)],
        obstacles=[Obstacle.rect((8.0, 0.0), 6.0, 10.0)],
        field=SampleField(points, np.ones(len(points))),
        steps=steps,
        planner=PlannerParams(cov_radius=1.5, cov_rate=1.0),
        cbf=CbfParams(use_h2=use_h2),
        seed=seed,
        name=f"detour-{seed}",
    )


def random_episode(rng: np.random.Generator, steps: int = 600, max_tries: int = 1000) -> Scenario:
    """Single agent heading to one sample point past one to three random obstacles.

    Obstacles are circles (radius 1-3 m) or rectangles (sides 1.5-6 m)
    scattered near the straight line to the goal. Draws that fail the
    scenario invariants are rejected and redrawn.
    """
    for _ in range(max_tries):
        goal_x = rng.uniform(10.0, 16.0)
        obstacles = []
        for i in range(int(rng.integers(1, 4))):
            c = (rng.uniform(3.0, goal_x - 3.0), rng.uniform(-2.0, 2.0))
            if rng.random() < 0.5:
                obstacles.append(Obstacle.circle(c, rng.uniform(1.0, 3.0), id=i))
            else:
                obstacles.append(Obstacle.rect(c, rng.uniform(1.5, 6.0), rng.uniform(1.5, 6.0), id=i))
        goal = (goal_x, rng.uniform(-1.0, 1.0))
        velocity = rng.uniform(-0.3, 0.3, 2)
        if any(geometry.contains(o, goal) for o in obstacles):
            continue
        sc = Scenario(
            agents=[AgentSpec.at((0.0, 0.0), velocity)],
            obstacles=obstacles,
            field=SampleField([goal], [1.0]),
            steps=steps,
            planner=PlannerParams(n_lsp=1, horizon=1, cov_radius=1.0, cov_rate=1.0),
            name="random-episode",
        )
        try:
            validate(sc)
        except ScenarioInvalid:
            continue
        return sc
    raise RuntimeError(f"no valid episode in {max_tries} draws")


def demo_path():
    return resources.files("swarmcover") / "data" / DEMO_RESOURCE


def demo_scenario() -> Scenario:
    """The bundled three-agent coverage scenario."""
    from .scenario_io import load_scenario

    with resources.as_file(demo_path()) as path:
        return load_scenario(path)
