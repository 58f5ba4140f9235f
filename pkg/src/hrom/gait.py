"""Heuristic narrow-path gait: Bezier foot paths, diagonal-pair schedule, joint references.

Foot targets are expressed relative to each hip in the body frame. One half-cycle
is ``step_time`` of stance/swing followed by ``pause_time`` with every foot held
on the ground. Pair A (FR, HL) is in stance during even half-cycles, pair B
(FL, HR) during odd ones.

Control-point layout (7 points, degree 6, Bernstein weights (1, 6, 15, 20, 15, 6, 1)/64
at s = 1/2):

* stance: a straight line with doubled end points and interior fractions
  (0.2, 0.5, 0.8), so the foot starts and stops at rest relative to the body;
* swing: P0-P2 over the lift-off point, P3 over the midpoint, P4-P6 over the
  touchdown point, with P2-P4 raised by ``step_height * 64/50`` and P2-P3 moved
  outward by ``swing_bow * 64/35``. The foot therefore lifts and lands almost
  vertically and peaks ``step_height`` above the stance line at s = 1/2, with the
  lateral excursion ``swing_bow`` outside the outermost end point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Degenerate, Infeasible, OutOfRange, Unreachable
from .kinematics import leg_inverse_kinematics, leg_vector_jacobian
from .params import LEGS, RobotParams

STANCE, SWING, PAUSE = "Stance", "Swing", "Pause"
PAIR_A = ("FR", "HL")
PAIR_B = ("FL", "HR")

_BINOM6 = np.array([math.comb(6, k) for k in range(7)], dtype=float)
_BINOM5 = np.array([math.comb(5, k) for k in range(6)], dtype=float)
_PROFILE = np.array([0.0, 0.0, 0.2, 0.5, 0.8, 1.0, 1.0])
_LIFT_GAIN = 64.0 / 50.0
_BOW_GAIN = 64.0 / 35.0


@dataclass(frozen=True)
class GaitParams:
    forward_velocity_ref: float = 0.1
    step_time: float = 0.4
    pause_time: float = 0.05
    step_height: float = 0.05
    stance_y_offset: float = 0.09
    duration: float = 3.5
    swing_bow: float = 0.04
    stance_height: float = 0.25
    step_length: float | None = None

    def __post_init__(self):
        if not self.step_time > 0:
            raise ValueError("step_time must be positive")
        if not self.step_height > 0:
            raise ValueError("step_height must be positive")
        if self.pause_time < 0 or self.duration <= 0:
            raise ValueError("pause_time must be >= 0 and duration > 0")
        expected = self.forward_velocity_ref * self.step_time
        if self.step_length is None:
            object.__setattr__(self, "step_length", expected)
        elif abs(self.step_length - expected) > 1e-12:
            raise ValueError(
                f"step_length {self.step_length} inconsistent with v_ref * step_time = {expected}"
            )

    @property
    def half_cycle(self):
        return self.step_time + self.pause_time


@dataclass(frozen=True)
class BezierCurve:
    control_points: np.ndarray

    def __post_init__(self):
        P = np.array(self.control_points, dtype=float)
        if P.shape != (7, 3):
            raise ValueError(f"a gait curve needs exactly 7 control points in R^3, got {P.shape}")
        P.setflags(write=False)
        object.__setattr__(self, "control_points", P)


def bezier_eval(curve: BezierCurve, s: float):
    """Position and d/ds of the degree-6 Bernstein curve at ``s`` in [0, 1]."""
    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"curve parameter {s} outside [0, 1]")
    P = curve.control_points
    k = np.arange(7)
    basis = _BINOM6 * s**k * (1.0 - s) ** (6 - k)
    k5 = np.arange(6)
    dbasis = _BINOM5 * s**k5 * (1.0 - s) ** (5 - k5)
    return basis @ P, 6.0 * dbasis @ np.diff(P, axis=0)


def _line_curve(start, end):
    start, end = np.asarray(start, float), np.asarray(end, float)
    return BezierCurve(start + np.outer(_PROFILE, end - start))


def _swing_curve(start, end, lift, bow_y):
    start, end = np.asarray(start, float), np.asarray(end, float)
    P = np.array([start, start, start, 0.5 * (start + end), end, end, end])
    P[2:5, 2] += lift * _LIFT_GAIN
    P[2:4, 1] = bow_y
    return BezierCurve(P)


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    phase: str
    curve: BezierCurve

    def at(self, t):
        span = self.t1 - self.t0
        if span <= 0.0:
            return self.curve.control_points[-1].copy(), np.zeros(3)
        s = min(max((t - self.t0) / span, 0.0), 1.0)
        p, dp = bezier_eval(self.curve, s)
        return p, dp / span


@dataclass(frozen=True)
class ContactSchedule:
    """Per-leg phase as a function of time."""

    segments: dict

    def phase(self, leg, t):
        return _find(self.segments[leg], t).phase

    def phases(self, t):
        return {leg: self.phase(leg, t) for leg in LEGS}


def _find(segments, t):
    for seg in segments:
        if t < seg.t1:
            return seg
    return segments[-1]


@dataclass(frozen=True)
class GaitPlan:
    params: GaitParams
    robot: RobotParams
    segments: dict = field(repr=False)
    standing: bool = False

    @property
    def schedule(self):
        return ContactSchedule(self.segments)

    @property
    def duration(self):
        return self.params.duration

    def curves(self, leg, phase=None):
        return [s.curve for s in self.segments[leg] if phase is None or s.phase == phase]

    def foot_target(self, leg, t):
        """Hip-relative foot position and velocity (body frame) at time ``t``."""
        return _find(self.segments[leg], t).at(t)


def _side(robot, leg):
    return 1.0 if robot.hip_offsets[LEGS.index(leg)][1] > 0 else -1.0


def build_gait(params: GaitParams, robot: RobotParams, standing=False) -> GaitPlan:
    """Swing/stance curves and the diagonal-pair schedule for a straight walk."""
    L = params.step_length
    z = -params.stance_height
    front, rear = 0.5 * L, -0.5 * L
    narrow = {leg: -_side(robot, leg) * params.stance_y_offset for leg in LEGS}
    segments = {leg: [] for leg in LEGS}

    if standing:
        for leg in LEGS:
            p = np.array([0.0, 0.0, z])
            segments[leg].append(Segment(0.0, math.inf, PAUSE, _line_curve(p, p)))
        plan = GaitPlan(params, robot, segments, standing=True)
        _check_reachable(plan)
        return plan

    # feet start wide under the hips, pair A forward and pair B back
    pos = {leg: np.array([front if leg in PAIR_A else rear, 0.0, z]) for leg in LEGS}
    T = params.half_cycle
    k = 0
    while k * T < params.duration:
        t0, t1 = k * T, k * T + params.step_time
        stance, swing = (PAIR_A, PAIR_B) if k % 2 == 0 else (PAIR_B, PAIR_A)
        for leg in stance:
            end = np.array([rear, pos[leg][1], z])
            segments[leg].append(Segment(t0, t1, STANCE, _line_curve(pos[leg], end)))
            pos[leg] = end
        for leg in swing:
            end = np.array([front, narrow[leg], z])
            side = _side(robot, leg)
            outer = max(side * pos[leg][1], side * end[1])
            bow = side * (outer + params.swing_bow * _BOW_GAIN)
            segments[leg].append(
                Segment(t0, t1, SWING, _swing_curve(pos[leg], end, params.step_height, bow))
            )
            pos[leg] = end
        if params.pause_time > 0:
            for leg in LEGS:
                segments[leg].append(
                    Segment(t1, t1 + params.pause_time, PAUSE, _line_curve(pos[leg], pos[leg]))
                )
        k += 1
    plan = GaitPlan(params, robot, segments)
    _check_reachable(plan)
    return plan


def _check_reachable(plan, samples=41):
    limits = plan.robot.leg_length_limits
    for leg in LEGS:
        for seg in plan.segments[leg]:
            for s in np.linspace(0.0, 1.0, samples):
                p, _ = bezier_eval(seg.curve, s)
                try:
                    leg_inverse_kinematics(p, limits)
                except (Unreachable, Degenerate) as exc:
                    raise Infeasible(f"{leg} {seg.phase} target {p} unreachable: {exc}") from exc


def _joint_pos_rate(plan, t):
    q = np.empty((4, 3))
    qd = np.empty((4, 3))
    limits = plan.robot.leg_length_limits
    for i, leg in enumerate(LEGS):
        p, dp = plan.foot_target(leg, t)
        q[i] = leg_inverse_kinematics(p, limits)
        qd[i] = np.linalg.solve(leg_vector_jacobian(*q[i]), dp)
    return q, qd


def joint_reference(t, plan: GaitPlan, fd_step=1e-4):
    """Desired (q_L, q_dot_L, q_ddot_L), each shaped (4, 3).

    Accelerations are a symmetric difference of the rate reference, one-sided
    at the ends of the horizon.
    """
    end = plan.duration
    if not 0.0 <= t <= end + 1e-12:
        raise OutOfRange(f"time {t} outside [0, {end}]")
    q, qd = _joint_pos_rate(plan, t)
    ta, tb = max(t - fd_step, 0.0), min(t + fd_step, end)
    _, qd_a = _joint_pos_rate(plan, ta)
    _, qd_b = _joint_pos_rate(plan, tb)
    qdd = (qd_b - qd_a) / (tb - ta)
    return q, qd, qdd


@dataclass(frozen=True)
class TrackingGains:
    kp: np.ndarray = field(default_factory=lambda: np.full(12, 400.0))
    kd: np.ndarray = field(default_factory=lambda: np.full(12, 40.0))


def joint_tracking(q, qd, reference, gains: TrackingGains | None = None):
    """PD-plus-feedforward joint acceleration command u_L (12,)."""
    gains = gains or TrackingGains()
    q_ref, qd_ref, qdd_ref = (np.asarray(r, dtype=float).reshape(12) for r in reference)
    q = np.asarray(q, dtype=float).reshape(12)
    qd = np.asarray(qd, dtype=float).reshape(12)
    return qdd_ref + gains.kp * (q_ref - q) + gains.kd * (qd_ref - qd)
