import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import linprog

from hrom.errors import Infeasible, OutOfRange
from hrom.gait import (PAIR_A, PAIR_B, PAUSE, STANCE, SWING, BezierCurve, GaitParams, TrackingGains,
                       bezier_eval, build_gait, joint_reference, joint_tracking)
from hrom.kinematics import leg_vector
from hrom.params import LEGS

coords = st.floats(-1.0, 1.0, allow_nan=False)
control_polygons = st.lists(st.tuples(coords, coords, coords), min_size=7, max_size=7)


def de_casteljau(P, s):
    P = np.array(P, dtype=float)
    while len(P) > 1:
        P = (1.0 - s) * P[:-1] + s * P[1:]
    return P[0]


# -- Bezier curves ----------------------------------------------------------

def test_endpoints_are_interpolated():
    P = np.arange(21.0).reshape(7, 3)
    c = BezierCurve(P)
    assert np.array_equal(bezier_eval(c, 0.0)[0], P[0])
    assert np.array_equal(bezier_eval(c, 1.0)[0], P[-1])


def test_degenerate_curve_is_constant():
    c = BezierCurve(np.tile([0.1, -0.2, 0.3], (7, 1)))
    for s in np.linspace(0, 1, 11):
        p, dp = bezier_eval(c, s)
        assert np.allclose(p, [0.1, -0.2, 0.3], atol=1e-15)
        assert np.allclose(dp, 0.0, atol=1e-14)


def test_uniform_line_midpoint():
    a, b = np.array([0.0, 1.0, -1.0]), np.array([0.6, -0.2, 0.4])
    P = a + np.outer(np.linspace(0, 1, 7), b - a)
    p, _ = bezier_eval(BezierCurve(P), 0.5)
    assert np.allclose(p, 0.5 * (a + b), atol=1e-12)


@given(control_polygons, st.floats(0.0, 1.0))
def test_matches_de_casteljau(P, s):
    p, _ = bezier_eval(BezierCurve(P), s)
    assert np.allclose(p, de_casteljau(P, s), atol=1e-12)


@given(control_polygons, st.floats(1e-3, 1.0 - 1e-3))
def test_derivative_matches_central_difference(P, s):
    c = BezierCurve(P)
    h = 1e-6
    fd = (de_casteljau(P, s + h) - de_casteljau(P, s - h)) / (2 * h)
    assert np.allclose(bezier_eval(c, s)[1], fd, atol=1e-6)


def test_endpoint_derivative():
    P = np.random.default_rng(3).normal(size=(7, 3))
    _, d0 = bezier_eval(BezierCurve(P), 0.0)
    assert np.allclose(d0, 6.0 * (P[1] - P[0]), atol=1e-13)


@settings(max_examples=30)
@given(control_polygons, st.floats(0.0, 1.0))
def test_curve_in_convex_hull(P, s):
    P = np.array(P)
    p, _ = bezier_eval(BezierCurve(P), s)
    # feasibility of p = P^T w with w >= 0, sum w = 1
    A_eq = np.vstack([P.T, np.ones(7)])
    res = linprog(np.zeros(7), A_eq=A_eq, b_eq=np.append(p, 1.0), bounds=[(0, None)] * 7)
    assert res.status == 0


@pytest.mark.parametrize("s", [-1e-9, 1.0 + 1e-9, math.nan])
def test_parameter_out_of_range(s):
    with pytest.raises(OutOfRange):
        bezier_eval(BezierCurve(np.zeros((7, 3))), s)


@pytest.mark.parametrize("shape", [(6, 3), (8, 3), (7, 2)])
def test_curve_needs_seven_points(shape):
    with pytest.raises(ValueError):
        BezierCurve(np.zeros(shape))


# -- parameters -------------------------------------------------------------

def test_step_length_follows_velocity_and_step_time():
    assert GaitParams(forward_velocity_ref=0.1, step_time=0.4).step_length == pytest.approx(0.04)
    with pytest.raises(ValueError):
        GaitParams(forward_velocity_ref=0.1, step_time=0.4, step_length=0.1)


@pytest.mark.parametrize("kw", [{"step_time": 0.0}, {"step_height": 0.0}, {"pause_time": -0.1},
                                {"duration": 0.0}])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        GaitParams(**kw)


# -- schedule ---------------------------------------------------------------

def test_diagonal_pairs_alternate(plan):
    sched = plan.schedule
    for t in np.arange(0.0, plan.duration, 1e-3):
        ph = sched.phases(t)
        a = {ph[leg] for leg in PAIR_A}
        b = {ph[leg] for leg in PAIR_B}
        assert len(a) == 1 and len(b) == 1
        a, b = a.pop(), b.pop()
        assert {a, b} in ({STANCE, SWING}, {PAUSE})


def test_pair_a_stands_first_then_pause(plan):
    p = plan.params
    assert plan.schedule.phase("FR", 0.1) == STANCE
    assert plan.schedule.phase("FL", 0.1) == SWING
    assert plan.schedule.phase("HL", p.step_time + 0.5 * p.pause_time) == PAUSE
    assert plan.schedule.phase("FR", p.half_cycle + 0.1) == SWING


def test_swing_apex_height(plan, robot):
    p = plan.params
    for leg in LEGS:
        for curve in plan.curves(leg, SWING):
            z = np.array([bezier_eval(curve, s)[0][2] for s in np.linspace(0, 1, 201)])
            assert z.max() - z[0] == pytest.approx(p.step_height, rel=1e-3)


def test_swing_advances_step_length(plan):
    L = plan.params.step_length
    for leg in LEGS:
        for curve in plan.curves(leg, SWING):
            P = curve.control_points
            assert P[-1, 0] - P[0, 0] == pytest.approx(L, abs=1e-12)


def test_stance_moves_backward_at_reference_speed(plan):
    p = plan.params
    t = p.half_cycle + 0.5 * p.step_time
    for leg in PAIR_B:
        _, v = plan.foot_target(leg, t)
        assert v[0] < 0
    # average stance speed over the segment equals the reference
    for leg in LEGS:
        for curve in plan.curves(leg, STANCE):
            P = curve.control_points
            assert (P[-1, 0] - P[0, 0]) / p.step_time == pytest.approx(-p.forward_velocity_ref)


def test_swing_bows_outside_stance_foot(plan, robot):
    for i, leg in enumerate(LEGS):
        side = 1.0 if robot.hip_offsets[i][1] > 0 else -1.0
        for curve in plan.curves(leg, SWING):
            P = curve.control_points
            y = [side * bezier_eval(curve, s)[0][1] for s in np.linspace(0, 1, 201)]
            assert max(y) > max(side * P[0, 1], side * P[-1, 1])


def test_feet_pulled_toward_centerline(plan, robot):
    off = plan.params.stance_y_offset
    for i, leg in enumerate(LEGS):
        side = 1.0 if robot.hip_offsets[i][1] > 0 else -1.0
        for curve in plan.curves(leg, SWING):
            assert curve.control_points[-1, 1] == pytest.approx(-side * off)
        for curve in plan.curves(leg, STANCE)[1:]:
            assert np.allclose(curve.control_points[:, 1], -side * off)


def test_unreachable_targets_rejected(robot):
    with pytest.raises(Infeasible):
        build_gait(GaitParams(stance_height=0.6), robot)


# -- joint references -------------------------------------------------------

def test_standing_reference_is_constant(robot):
    standing = build_gait(GaitParams(forward_velocity_ref=0.0), robot, standing=True)
    q0, _, _ = joint_reference(0.0, standing)
    for t in (0.0, 1.0, 3.5):
        q, qd, qdd = joint_reference(t, standing)
        assert np.allclose(q, q0) and np.allclose(qd, 0.0) and np.allclose(qdd, 0.0)


def test_zero_velocity_gait_is_stationary(robot):
    plan = build_gait(GaitParams(forward_velocity_ref=0.0), robot)
    for leg in LEGS:
        for c in plan.curves(leg, STANCE):
            assert np.ptp(c.control_points, axis=0) == pytest.approx(np.zeros(3))
        for c in plan.curves(leg, SWING)[1:]:
            assert np.allclose(c.control_points[0], c.control_points[-1])


def test_reference_reproduces_foot_targets(plan):
    for t in np.linspace(0.0, plan.duration, 37):
        q, _, _ = joint_reference(t, plan)
        for i, leg in enumerate(LEGS):
            assert np.allclose(leg_vector(*q[i]), plan.foot_target(leg, t)[0], atol=1e-10)


def test_reference_rates_match_finite_difference(plan):
    h = 1e-6
    for t in (0.13, 0.61, 1.27, 2.9):
        _, qd, _ = joint_reference(t, plan)
        qa, _, _ = joint_reference(t - h, plan)
        qb, _, _ = joint_reference(t + h, plan)
        assert np.allclose(qd, (qb - qa) / (2 * h), atol=1e-5)


def test_reference_continuous_across_handoffs(plan):
    for seg in plan.segments["FR"]:
        if seg.t1 >= plan.duration:
            break
        qa, _, _ = joint_reference(seg.t1 - 1e-12, plan)
        qb, _, _ = joint_reference(seg.t1, plan)
        assert np.max(np.abs(qa - qb)) < 1e-9


def test_leg_shortest_at_swing_apex(plan):
    p = plan.params
    t0 = p.half_cycle  # pair A swings during the second half-cycle
    ts = np.linspace(0.0, 2 * p.half_cycle, 401)
    lengths = np.array([joint_reference(t, plan)[0][0, 2] for t in ts])
    apex = t0 + 0.5 * p.step_time
    assert lengths.min() == pytest.approx(joint_reference(apex, plan)[0][0, 2], abs=1e-4)


def test_references_within_length_limits(plan, robot):
    lo, hi = robot.leg_length_limits
    for t in np.arange(0.0, plan.duration, 0.01):
        q, _, _ = joint_reference(t, plan)
        assert np.all((q[:, 2] >= lo) & (q[:, 2] <= hi))


@pytest.mark.parametrize("t", [-0.01, 3.6])
def test_reference_outside_horizon(plan, t):
    with pytest.raises(OutOfRange):
        joint_reference(t, plan)


# -- tracking ---------------------------------------------------------------

def test_tracking_zero_error_is_feedforward(rng):
    q, qd, qdd = rng.normal(size=(3, 4, 3))
    assert np.allclose(joint_tracking(q, qd, (q, qd, qdd)), qdd.reshape(12))


def test_tracking_gain_arithmetic():
    ref = (np.zeros(12), np.zeros(12), np.zeros(12))
    q = np.zeros(12)
    q[4] = -1.0
    u = joint_tracking(q, np.zeros(12), ref)
    assert u[4] == 400.0 and np.count_nonzero(u) == 1
    u = joint_tracking(np.zeros(12), np.full(12, -1.0), ref)
    assert np.allclose(u, 40.0)


def test_tracking_closed_loop_does_not_overshoot():
    g = TrackingGains()
    A = np.array([[0.0, 1.0], [-g.kp[0], -g.kd[0]]])
    x0 = np.array([-1.0, 0.0])  # unit step toward q_ref = 0
    xs = np.array([expm(A * t) @ x0 for t in np.linspace(0.0, 1.0, 1001)])
    assert xs[:, 0].max() <= 0.05
    assert abs(xs[-1, 0]) < 1e-6
