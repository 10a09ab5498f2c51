"""Density-driven multi-agent coverage with barrier-function obstacle avoidance."""

from .errors import ScenarioInvalid, SwarmCoverError
from .geometry import Obstacle
from .sim import AgentSpec, Metrics, Scenario, TrajectoryLog, audit, coverage_metric, run, simulate

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "Metrics",
    "Obstacle",
    "Scenario",
    "ScenarioInvalid",
    "SwarmCoverError",
    "TrajectoryLog",
    "audit",
    "coverage_metric",
    "run",
    "simulate",
]
