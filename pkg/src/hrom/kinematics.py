"""Rotations, Euler-rate kinematics and leg forward/inverse kinematics.

Euler angles are stored as (yaw, pitch, roll) with R = Rz(yaw) Ry(pitch) Rx(roll),
mapping body-frame vectors to the inertial frame.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import Degenerate, NearSingular, Unreachable
from .params import LEG_INDEX, RobotParams

EPS_PITCH = 0.1


def skew(r):
    x, y, z = r
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(S):
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def euler_to_rotation(angles):
    yaw, pitch, roll = (float(a) for a in angles)
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_euler(R):
    """Z-Y-X angles (yaw, pitch, roll) from a rotation matrix, each in (-pi, pi]."""
    R = np.asarray(R, dtype=float)
    pitch = math.atan2(-R[2, 0], math.hypot(R[2, 1], R[2, 2]))
    yaw = math.atan2(R[1, 0], R[0, 0])
    roll = math.atan2(R[2, 1], R[2, 2])
    return np.array([wrap_angle(yaw), pitch, wrap_angle(roll)])


def euler_rate_matrix(angles):
    """E such that the body angular velocity is ``E @ [yaw_dot, pitch_dot, roll_dot]``."""
    _, pitch, roll = (float(a) for a in angles)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [-sp, 0.0, 1.0],
            [cp * sr, cr, 0.0],
            [cp * cr, -sr, 0.0],
        ]
    )


def euler_rates(angles, omega_body, eps_pitch=EPS_PITCH):
    """Invert the Euler-rate map: (yaw_dot, pitch_dot, roll_dot) from body rates."""
    _, pitch, roll = (float(a) for a in angles)
    cp = math.cos(pitch)
    if abs(cp) < eps_pitch:
        raise NearSingular(f"pitch {pitch:.4f} rad is within the gimbal-lock guard")
    sp = math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    wx, wy, wz = omega_body
    yaw_dot = (sr * wy + cr * wz) / cp
    pitch_dot = cr * wy - sr * wz
    roll_dot = wx + sp * yaw_dot
    return np.array([yaw_dot, pitch_dot, roll_dot])


def leg_vector(phi, gamma, length):
    """Hip-to-foot vector in the body frame: Ry(phi) Rx(gamma) [0, 0, -l]."""
    cp, sp = math.cos(phi), math.sin(phi)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return np.array([-length * sp * cg, length * sg, -length * cp * cg])


def leg_vector_jacobian(phi, gamma, length):
    """Columns are d(leg_vector)/d(phi, gamma, length)."""
    cp, sp = math.cos(phi), math.sin(phi)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return np.array(
        [
            [-length * cp * cg, length * sp * sg, -sp * cg],
            [0.0, length * cg, sg],
            [length * sp * cg, length * cp * sg, -cp * cg],
        ]
    )


def _leg_index(leg_id):
    if isinstance(leg_id, str):
        return LEG_INDEX[leg_id]
    return int(leg_id)


def foot_offset_body(params: RobotParams, q_leg, leg_id):
    """COM-to-foot vector in the body frame."""
    i = _leg_index(leg_id)
    return params.hip_offsets[i] + leg_vector(*q_leg)


def foot_position_world(position, angles, params: RobotParams, q_leg, leg_id):
    R = euler_to_rotation(angles)
    return np.asarray(position, dtype=float) + R @ foot_offset_body(params, q_leg, leg_id)


def leg_inverse_kinematics(target_rel_hip, limits=(0.05, 0.5)):
    """(phi, gamma, length) placing the foot at ``target_rel_hip`` (body frame).

    Branch: gamma in [-pi/2, pi/2] from the lateral component, phi from the
    sagittal remainder; unique for targets below the hip.
    """
    x, y, z = (float(v) for v in target_rel_hip)
    length = math.sqrt(x * x + y * y + z * z)
    if length < 1e-9:
        raise Degenerate("foot target coincides with the hip")
    lo, hi = limits
    if not lo <= length <= hi:
        raise Unreachable(f"target distance {length:.4f} m outside [{lo}, {hi}]")
    planar = math.hypot(x, z)
    gamma = math.atan2(y, planar)
    if planar < 1e-12:
        phi = 0.0
    else:
        phi = math.atan2(-x, -z)
        if phi <= -math.pi:
            phi += 2.0 * math.pi
    return phi, gamma, length


def foot_jacobian(angles, params: RobotParams, q_leg, leg_id):
    """3x6 map from v = [p_dot_B (world), omega_B (body)] to foot velocity (world)."""
    R = euler_to_rotation(angles)
    r = foot_offset_body(params, q_leg, leg_id)
    J = np.empty((3, 6))
    J[:, :3] = np.eye(3)
    J[:, 3:] = -R @ skew(r)
    return J
