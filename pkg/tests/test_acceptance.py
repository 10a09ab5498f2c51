"""Acceptance criteria, one test each. Run with ``pytest tests/test_acceptance.py -s``.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import filecmp
import math
import time

import numpy as np
import pytest

from swarmcover import geometry, safety
from swarmcover.cli import compare, main
from swarmcover.dynamics import (
    DPX,
    DPY,
    PX,
    PY,
    build_double_integrator,
    build_quadrotor,
    build_single_integrator,
    quadrotor_limits,
    relative_degree,
)
from swarmcover.errors import BoundaryDenominator, UnsafeState
from swarmcover.geometry import Obstacle
from swarmcover.safety import CbfParams, FilterStatus, SafetyProblem, build_problem, filter_input
from swarmcover.scenarios import demo_path, demo_scenario, detour_scenario, random_episode
from swarmcover.sim import run
from swarmcover.transport import WeightedPoints, matching_oracle, wasserstein


def test_1_geometry_properties(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_norm = worst_bp = worst_branch = 0.0
    for i in range(10_000):
        c = rng.uniform(-50, 50, 2)
        if i % 2:
            obs = Obstacle.circle(c, rng.uniform(0.1, 20))
        else:
            obs = Obstacle.rect(c, rng.uniform(0.1, 20), rng.uniform(0.1, 20))
        y = c + rng.normal(size=2) * rng.uniform(0.1, 60)
        n = geometry.unit_normal(obs, y)
        worst_norm = max(worst_norm, abs(math.hypot(*n) - 1.0))
        d = geometry.boundary_point(obs, y) - c
        if obs.kind == geometry.CIRCLE:
            gap = abs(math.hypot(*d) - obs.radius)
        else:
            # on the boundary one of the two face coordinates is at its half-extent
            gap = min(abs(abs(d[0]) - obs.length / 2), abs(abs(d[1]) - obs.width / 2))
            gap = max(gap, abs(d[0]) - obs.length / 2, abs(d[1]) - obs.width / 2)
            half_diag = 0.5 * math.hypot(obs.length, obs.width)
            for th in (obs.corner_angle, math.pi - obs.corner_angle):
                r_tb, r_lr = geometry._face_radii(obs, th)
                worst_branch = max(worst_branch, abs(r_tb - half_diag), abs(r_lr - half_diag))
        worst_bp = max(worst_bp, gap)
    elapsed = time.perf_counter() - t0
    ok = worst_norm <= 1e-12 and worst_bp <= 1e-9 and worst_branch <= 1e-9 and elapsed < 5.0
    criterion(
        1,
        "geometry property suite",
        ok,
        f"|n|-1 {worst_norm:.1e}, boundary gap {worst_bp:.1e}, branch gap {worst_branch:.1e}, {elapsed:.2f} s",
    )


def _slice_problem(obs, y, v, params):
    """Single-obstacle constraint stack for a standstill point on the +x ray."""
    pos = np.array([y, 0.0])
    geo = geometry.boundary_geometry(obs, pos)
    return SafetyProblem(
        y0=pos,
        G=np.zeros((2, 2)),
        y_frozen=pos,
        v0=np.array([v, 0.0]),
        F=np.zeros((2, 2)),
        centers=obs.p.reshape(1, 2),
        radii=np.array([geo.r_o]),
        normals=geo.n_hat.reshape(1, 2),
        denoms=np.array([safety._denominator(obs, pos, geo)]),
        obstacle_ids=(obs.id,),
        u_max=np.array([1.0, 1.0]),
    )


def test_2_safe_set_slice(criterion):
    obs = Obstacle.circle((0.0, 0.0), 2.0)
    params = CbfParams(K_v=5.0)
    at_ref = safety.h2(obs, (3.0, 0.0), (3.0, 0.0), (-1.0, 0.0), params)
    speeds = [safety.admissible_approach_speed(obs, (y, 0.0), params) for y in (4.0, 3.0, 2.5, 2.1)]
    monotone = all(a > b for a, b in zip(speeds, speeds[1:]))
    near = safety.admissible_approach_speed(obs, (2.02, 0.0), params)

    mismatches = closed_form_mismatches = 0
    for y in np.linspace(0.01, 5.0, 200):
        for v in np.linspace(-3.0, 3.0, 200):
            s1 = safety.h1(obs, (y, 0.0), (y, 0.0)) >= 0
            try:
                s2 = safety.h2(obs, (y, 0.0), (y, 0.0), (v, 0.0), params) >= 0
            except BoundaryDenominator:
                s2 = False
            stacked = bool(_slice_problem(obs, y, v, params).constraint_values([0.0, 0.0], params).min() >= 0)
            mismatches += stacked != (s1 and s2)
            boundary_v = -(y * y - 4.0) * (y - 2.0) / 5.0
            if abs(v - boundary_v) > 1e-9:
                closed_form_mismatches += (s1 and s2) != (y >= 2.0 and v >= boundary_v)
    ok = abs(at_ref) <= 1e-9 and monotone and near < 0.1 and mismatches == 0 and closed_form_mismatches == 0
    criterion(
        2,
        "safe-set slice",
        ok,
        f"h2(3,-1)={at_ref:.1e}, speeds {[round(s, 4) for s in speeds]}, v(2.02)={near:.4f}, "
        f"grid mismatches {mismatches}/{closed_form_mismatches}",
    )


def test_3_rectangle_detour(criterion):
    t0 = time.perf_counter()
    h1_only, both = [], []
    for seed in range(20):
        h1_only.append(run(detour_scenario(seed, use_h2=False))[1])
        both.append(run(detour_scenario(seed, use_h2=True))[1])
    elapsed = time.perf_counter() - t0
    unsafe_runs = sum(m.obstacle_violations > 0 or m.minimal_violation_steps > 0 for m in h1_only)
    violations = sum(m.obstacle_violations for m in both)
    ok = unsafe_runs >= 1 and violations == 0 and elapsed < 60.0
    criterion(
        3,
        "rectangle detour sweep",
        ok,
        f"h1-only unsafe runs {unsafe_runs}/20, h1+h2 violations {violations}, {elapsed:.1f} s",
    )


@pytest.mark.slow
def test_4_invariance_suite(criterion):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mv_episodes = bad = 0
    worst = math.inf
    for _ in range(500):
        log, m = run(random_episode(rng))
        if m.minimal_violation_steps > 0:
            mv_episodes += 1
            continue
        lowest = float(np.nanmin(log.min_h))
        worst = min(worst, lowest)
        bad += lowest < -1e-9
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and mv_episodes < 25 and elapsed < 300.0
    criterion(
        4,
        "forward invariance over random episodes",
        ok,
        f"minimal-violation episodes {mv_episodes}/500, episodes with h1<-1e-9 {bad}, min h1 {worst:.3g}, {elapsed:.0f} s",
    )


def _random_state(rng):
    x = np.zeros(8)
    x[PX], x[PY] = rng.uniform(-8, 8, 2)
    x[DPX], x[DPY] = rng.uniform(-0.4, 0.4, 2)
    x[[2, 3, 6, 7]] = rng.uniform(-1, 1, 4) * [0.02, 0.1, 0.02, 0.1]
    return x


def _random_obstacles(rng):
    obs = []
    for i in range(int(rng.integers(1, 4))):
        c = rng.uniform(-6, 6, 2)
        if rng.random() < 0.5:
            obs.append(Obstacle.circle(c, rng.uniform(1, 3), id=i))
        else:
            obs.append(Obstacle.rect(c, *rng.uniform(1.5, 5, 2), id=i))
    return obs


@pytest.mark.slow
def test_5_filter_optimality(criterion):
    quad, limits, params = build_quadrotor(), quadrotor_limits(), CbfParams()
    P = relative_degree(quad)
    axis = np.linspace(-10.0, 10.0, 401)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    checked = empty = wrong_status = 0
    worst_gap = -math.inf
    while checked < 200:
        try:
            prob = build_problem(quad, limits, _random_state(rng), P, _random_obstacles(rng))
        except UnsafeState:
            continue
        u_nom = rng.uniform(-10, 10, 2)
        if prob.constraint_values(u_nom, params).min() >= 0:
            continue
        res = filter_input(prob, u_nom, params)
        feasible = prob.constraint_values(grid, params).min(axis=1) >= 0
        if not feasible.any():
            # the oracle finds nothing either; the filter must say so
            empty += 1
            wrong_status += res.status is not FilterStatus.MINIMAL_VIOLATION
            continue
        oracle = np.sqrt(((grid[feasible] - u_nom) ** 2).sum(axis=1)).min()
        ours = np.linalg.norm(res.u_filtered - u_nom)
        exact_ok = prob.constraint_values(res.u_filtered, params).min() >= 0
        worst_gap = max(worst_gap, ours - oracle if exact_ok else math.inf)
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-3 and wrong_status == 0 and elapsed < 120.0
    criterion(
        5,
        "filter optimality vs 401x401 grid",
        ok,
        f"200 feasible problems, max excess deviation {worst_gap:.2e}, "
        f"{empty} empty-set problems with {wrong_status} mislabeled, {elapsed:.1f} s",
    )


@pytest.mark.slow
def test_6_demo_ordering(criterion, tmp_path):
    t0 = time.perf_counter()
    doc = compare(demo_scenario(), tmp_path / "cmp")
    elapsed = time.perf_counter() - t0
    ok = (
        doc["wasserstein_cbf"] < doc["wasserstein_apf"]
        and doc["min_dist_cbf"] >= 5.0
        and doc["obstacle_violations_cbf"] == 0
        and elapsed < 180.0
    )
    criterion(
        6,
        "demo coverage ordering",
        ok,
        f"W2 cbf {doc['wasserstein_cbf']:.3f} < apf {doc['wasserstein_apf']:.3f}, "
        f"min dist {doc['min_dist_cbf']:.2f} m, violations {doc['obstacle_violations_cbf']}, {elapsed:.1f} s",
    )


def test_7_transport(criterion):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    oracle_gap = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        a = WeightedPoints.uniform(rng.normal(size=(n, 2)) * 5)
        b = WeightedPoints.uniform(rng.normal(size=(n, 2)) * 5)
        for order in (1, 2):
            oracle_gap = max(oracle_gap, abs(wasserstein(a, b, order) - matching_oracle(a, b, order)))
    prop_gap = 0.0
    for _ in range(1000):
        a, b, c = (
            WeightedPoints(rng.uniform(-10, 10, (k, 2)), rng.uniform(0.1, 5, k))
            for k in rng.integers(1, 7, 3)
        )
        ab = wasserstein(a, b)
        s = rng.uniform(0.1, 10)
        prop_gap = max(
            prop_gap,
            abs(ab - wasserstein(b, a)),
            ab - wasserstein(a, c) - wasserstein(c, b),
            abs(wasserstein(WeightedPoints(a.points * s, a.weights), WeightedPoints(b.points * s, b.weights)) - s * ab),
        )
    elapsed = time.perf_counter() - t0
    ok = oracle_gap <= 1e-9 and prop_gap <= 1e-9 and elapsed < 30.0
    criterion(
        7,
        "transport oracle and metric properties",
        ok,
        f"oracle gap {oracle_gap:.1e}, property gap {prop_gap:.1e}, {elapsed:.1f} s",
    )


def test_8_relative_degree(criterion):
    got = (
        relative_degree(build_quadrotor(0.1, 9.81, 1)),
        relative_degree(build_double_integrator()),
        relative_degree(build_single_integrator()),
    )
    criterion(8, "relative degree", got == (4, 2, 1), f"quadrotor/double/single = {got}")


@pytest.mark.slow
def test_9_determinism(criterion, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    codes = []
    for d in dirs:
        codes.append(main(["run", "--scenario", str(demo_path()), "--out", str(d)]))
        codes.append(main(["plot", "--run", str(d), "--out", str(d / "paths.svg")]))
    files = sorted(p.name for p in dirs[0].iterdir())
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
    ok = codes == [0, 0, 0, 0] and not mismatch and not errors and len(match) == 4
    criterion(9, "byte-identical reruns", ok, f"identical: {', '.join(match)}; differing: {mismatch or 'none'}")
