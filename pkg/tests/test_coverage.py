import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swarmcover.coverage import (
    ControllerGains,
    PlannerParams,
    SampleField,
    merge_weights,
    nominal_control,
    plan_goal,
    plan_goal_index,
    select_lsps,
    sequence_cost,
    spectral_radius,
    update_weights,
    wnd,
)
from swarmcover.dynamics import PX, build_quadrotor, quadrotor_limits
from swarmcover.errors import FieldExhausted, FieldMismatch, InvalidParameter, UnstableGains, ZeroWeight
from swarmcover.sim import default_gains

QUAD = build_quadrotor()


def field(points, weights):
    return SampleField(np.asarray(points, dtype=float), np.asarray(weights, dtype=float))


def test_wnd_examples():
    assert wnd((0, 0), (3, 4), 2) == pytest.approx(2.5)
    assert wnd((1, 1), (1, 1), 0.3) == 0.0
    assert wnd((0, 0), (3, 4), 4) == pytest.approx(wnd((0, 0), (3, 4), 2) / 2)
    with pytest.raises(ZeroWeight):
        wnd((0, 0), (1, 0), 0.0)


def test_select_lsps_examples():
    f = field([[1, 0], [2, 0]], [1, 4])
    assert select_lsps((0, 0), f, 1) == [1]
    g = field([[5, 0], [1, 0], [3, 0], [2, 0]], [1, 1, 1, 1])
    assert select_lsps((0, 0), g, 2) == [1, 3]
    h = field([[1, 0], [100, 0]], [0, 1])
    assert select_lsps((0, 0), h, 3) == [1]
    with pytest.raises(FieldExhausted):
        select_lsps((0, 0), field([[1, 0]], [0]), 1)


def test_select_lsps_breaks_ties_by_index():
    f = field([[1, 0], [0, 1], [-1, 0]], [1, 1, 1])
    assert select_lsps((0, 0), f, 2) == [0, 1]


def test_plan_goal_examples():
    f = field([[1, 0], [1.2, 0]], [1, 10])
    np.testing.assert_array_equal(plan_goal((0, 0), f, PlannerParams(n_lsp=2, horizon=1)), [1.2, 0])
    single = field([[1, 0], [7, 7], [3, 3]], [0, 2, 0])
    np.testing.assert_array_equal(plan_goal((0, 0), single, PlannerParams()), [7, 7])


def brute_force_goal(pos, f, params):
    lsps = select_lsps(pos, f, params.n_lsp)
    L = min(params.horizon, len(lsps))
    best = min(
        itertools.permutations(sorted(lsps), L),
        key=lambda seq: (sequence_cost(pos, f, seq, params.discount), seq),
    )
    return best[0]


@pytest.mark.parametrize("seed", range(10))
def test_plan_goal_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    f = field(rng.uniform(-10, 10, (12, 2)), rng.integers(0, 4, 12).astype(float))
    if f.total_weight == 0:
        return
    params = PlannerParams(n_lsp=5, horizon=3, discount=0.8)
    idx = plan_goal_index((0.5, -0.5), f, params)
    assert idx == brute_force_goal((0.5, -0.5), f, params)
    assert f.weights[idx] > 0


def test_equal_weights_horizon_one_is_nearest_neighbor():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-5, 5, (20, 2))
    f = field(pts, np.ones(20))
    idx = plan_goal_index((0, 0), f, PlannerParams(n_lsp=4, horizon=1))
    assert idx == int(np.argmin(np.hypot(*pts.T)))


weight_values = st.one_of(st.just(0.0), st.floats(0.01, 5.0))


@settings(max_examples=50)
@given(arrays(np.float64, 8, elements=weight_values), st.sampled_from([0.25, 2.0, 8.0]))
def test_lsp_selection_invariant_to_weight_scaling(w, c):
    # power-of-two factors scale every score exactly, so no rounding ties appear
    pts = np.stack([np.arange(8.0), np.zeros(8)], axis=1)
    if not np.any(w > 0):
        return
    assert select_lsps((2.5, 1.0), field(pts, w), 4) == select_lsps((2.5, 1.0), field(pts, w * c), 4)


def test_planner_params_validation():
    with pytest.raises(InvalidParameter):
        PlannerParams(n_lsp=2, horizon=3)
    with pytest.raises(InvalidParameter):
        PlannerParams(discount=0.0)
    with pytest.raises(InvalidParameter):
        PlannerParams(cov_radius=0)


def test_update_weights_examples():
    f = field([[0, 0], [5, 0], [0.5, 0]], [1.0, 1.0, 0.0])
    out = update_weights(f, (0, 0), PlannerParams(cov_radius=1.0, cov_rate=2.0), 0.1)
    np.testing.assert_allclose(out.weights, [0.8, 1.0, 0.0])
    assert out.version == f.version + 1
    same = update_weights(f, (50, 50), PlannerParams(), 0.1)
    np.testing.assert_array_equal(same.weights, f.weights)
    assert same.version == f.version + 1


def test_merge_examples():
    pts = np.zeros((3, 2))
    a, b = field(pts, [3, 0, 2]), field(pts, [1, 4, 2])
    np.testing.assert_array_equal(merge_weights(a, b).weights, [1, 0, 2])
    np.testing.assert_array_equal(merge_weights(a, a).weights, a.weights)
    with pytest.raises(FieldMismatch):
        merge_weights(a, field(np.ones((3, 2)), [1, 1, 1]))


@settings(max_examples=100)
@given(
    arrays(np.float64, 6, elements=st.floats(0, 10)),
    arrays(np.float64, 6, elements=st.floats(0, 10)),
    arrays(np.float64, 6, elements=st.floats(0, 10)),
)
def test_merge_is_a_semilattice(wa, wb, wc):
    pts = np.arange(12.0).reshape(6, 2)
    a, b, c = field(pts, wa), field(pts, wb), field(pts, wc)
    np.testing.assert_array_equal(merge_weights(a, b).weights, merge_weights(b, a).weights)
    np.testing.assert_array_equal(
        merge_weights(merge_weights(a, b), c).weights, merge_weights(a, merge_weights(b, c)).weights
    )
    np.testing.assert_array_equal(merge_weights(a, a).weights, a.weights)
    assert np.all(merge_weights(a, b).weights <= a.weights)


def test_default_gains_are_stable():
    K = default_gains(QUAD).matrix(QUAD)
    assert spectral_radius(QUAD.A - QUAD.B @ K) < 1


def test_unstable_gains_rejected():
    with pytest.raises(UnstableGains):
        ControllerGains(-1.0, 0.0, 0.0, 0.0).matrix(QUAD)


def test_nominal_control_fixed_point_and_linearity():
    gains = ControllerGains.lqr(QUAD)
    goal = (3.0, -2.0)
    x = np.zeros(8)
    x[PX], x[4] = goal
    np.testing.assert_array_equal(nominal_control(QUAD, gains, x, goal), [0.0, 0.0])
    y = np.linspace(-0.2, 0.3, 8)
    u1 = nominal_control(QUAD, gains, y, goal)
    scaled = ControllerGains(*(2 * g for g in (gains.k_p, gains.k_d, gains.k_a, gains.k_r)))
    K2 = 2 * gains.matrix(QUAD)
    np.testing.assert_allclose(nominal_control(QUAD, scaled, y, goal, K=K2), 2 * u1, rtol=1e-12)


def test_nominal_control_is_clamped():
    gains = ControllerGains.lqr(QUAD)
    x = np.zeros(8)
    x[2] = 5.0  # large tilt error
    u = nominal_control(QUAD, gains, x, (0, 0), quadrotor_limits())
    assert np.all(np.abs(u) <= 10.0)


def test_position_error_cap_bounds_cruise_input():
    gains = ControllerGains.lqr(QUAD, max_position_error=1.5)
    near = nominal_control(QUAD, gains, np.zeros(8), (1.5, 0.0))
    far = nominal_control(QUAD, gains, np.zeros(8), (100.0, 0.0))
    np.testing.assert_allclose(near, far)
