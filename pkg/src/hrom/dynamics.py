"""Single-rigid-body equations of motion with massless legs and a thrust wrench.

Translational dynamics live in the inertial frame, rotational in the body frame,
so the generalized velocity is v = [p_dot_B (world), omega_B (body)] and

    D v_dot + C(v) v + G = sum_i B_i^T u_gi + u_t,

with the thrust force given in the body frame and rotated into the world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import lsq_linear

from .contact import ground_force_components
from .errors import BoundsViolation
from .kinematics import EPS_PITCH, euler_rates, euler_to_rotation
from .params import GroundParams, RobotParams
from .state import ANG, NU, NX, OMEGA, POS, QL, QLD, VEL, as_state_array


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    moment: np.ndarray

    def as_array(self):
        return np.concatenate([self.force, self.moment])

    @classmethod
    def from_array(cls, w):
        w = np.asarray(w, dtype=float)
        return cls(w[:3].copy(), w[3:6].copy())

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class ThrusterForces:
    forces: np.ndarray  # (4,) N, FR, HR, FL, HL
    saturated: bool = False

    @property
    def total(self):
        return float(np.sum(self.forces))


@dataclass(frozen=True)
class ControlInput:
    wrench: Wrench
    joint_accels: np.ndarray  # (12,)

    def as_array(self):
        return np.concatenate([self.wrench.as_array(), self.joint_accels])

    @classmethod
    def from_array(cls, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (NU,):
            raise ValueError(f"expected a control of length {NU}, got {u.shape}")
        return cls(Wrench.from_array(u[:6]), u[6:].copy())


def generalized_matrices(state, params: RobotParams):
    """(D, Cv, G) of the manipulator form."""
    x = as_state_array(state)
    w = x[OMEGA]
    I = params.inertia
    D = np.zeros((6, 6))
    D[:3, :3] = params.mass * np.eye(3)
    D[3:, 3:] = I
    Cv = np.concatenate([np.zeros(3), np.cross(w, I @ w)])
    G = np.concatenate([-params.mass * params.gravity, np.zeros(3)])
    return D, Cv, G


def allocation_matrix(params: RobotParams):
    """6x4 map from EDF thrust magnitudes to the body-frame COM wrench."""
    a = params.thruster_axis
    A = np.empty((6, 4))
    for i, p in enumerate(params.thruster_positions):
        A[:3, i] = a
        A[3:, i] = np.cross(p, a)
    return A


def thruster_wrench(forces, params: RobotParams, check=True) -> Wrench:
    f = np.asarray(getattr(forces, "forces", forces), dtype=float)
    if check and (np.any(f < 0.0) or np.any(f > params.max_thrust_per_edf)):
        raise BoundsViolation(f"thrust {f} outside [0, {params.max_thrust_per_edf}]")
    return Wrench.from_array(allocation_matrix(params) @ f)


def _achievable_rows(A, tol=1e-12):
    # rows of the allocation map that carry any thrust authority
    return np.flatnonzero(np.abs(A).max(axis=1) > tol)


def wrench_allocation(desired, params: RobotParams, clamp=True) -> ThrusterForces:
    """Thrust magnitudes reproducing the achievable part of ``desired``.

    Minimum-norm least squares on the achievable rows; when that leaves
    [0, max] the box-constrained least-squares solution is used instead and the
    result is flagged saturated.
    """
    w = np.asarray(getattr(desired, "as_array", lambda: desired)(), dtype=float)
    A = allocation_matrix(params)
    rows = _achievable_rows(A)
    Aa, wa = A[rows], w[rows]
    f = np.linalg.pinv(Aa) @ wa
    fmax = params.max_thrust_per_edf
    if not clamp or (f.min() >= 0.0 and f.max() <= fmax):
        return ThrusterForces(f, False)
    res = lsq_linear(Aa, wa, bounds=(0.0, fmax), method="bvls", tol=1e-12)
    return ThrusterForces(np.clip(res.x, 0.0, fmax), True)


def _cross(a, b):
    # np.cross is slow for single 3-vectors
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def _leg_vectors(q, qd):
    """Hip-to-foot vectors and their joint-rate velocities for all legs, (4, 3) each."""
    phi, gamma, length = q[:, 0], q[:, 1], q[:, 2]
    cp, sp = np.cos(phi), np.sin(phi)
    cg, sg = np.cos(gamma), np.sin(gamma)
    r = np.column_stack([-length * sp * cg, length * sg, -length * cp * cg])
    dphi, dgamma, dl = qd[:, 0], qd[:, 1], qd[:, 2]
    rdot = np.column_stack(
        [
            -length * cp * cg * dphi + length * sp * sg * dgamma - sp * cg * dl,
            length * cg * dgamma + sg * dl,
            length * sp * cg * dphi + length * cp * sg * dgamma - cp * cg * dl,
        ]
    )
    return r, rdot


def foot_kinematics(x, params: RobotParams):
    """World foot positions, velocities, COM-to-foot body offsets and R_B."""
    R = euler_to_rotation(x[ANG])
    p, v, w = x[POS], x[VEL], x[OMEGA]
    legs, legs_dot = _leg_vectors(x[QL].reshape(4, 3), x[QLD].reshape(4, 3))
    offsets = params.hip_offsets + legs
    # omega x r for every row, then rotate into the world frame
    wxr = np.column_stack(
        [
            w[1] * offsets[:, 2] - w[2] * offsets[:, 1],
            w[2] * offsets[:, 0] - w[0] * offsets[:, 2],
            w[0] * offsets[:, 1] - w[1] * offsets[:, 0],
        ]
    )
    pos = p + offsets @ R.T
    vel = v + (wxr + legs_dot) @ R.T
    return pos, vel, offsets, R


def contact_forces(x, params: RobotParams, ground: GroundParams):
    """Per-foot GRF (4, 3) in the world frame and contact flags."""
    pos, vel, _, _ = foot_kinematics(x, params)
    F = np.zeros((4, 3))
    flags = [False] * 4
    for i in range(4):
        fx, fy, fz, c = ground_force_components(pos[i], vel[i], ground)
        F[i] = (fx, fy, fz)
        flags[i] = c
    return F, flags


def dynamics_rhs(state, control, params: RobotParams, ground: GroundParams | None,
                 eps_pitch=EPS_PITCH, smoothing=None):
    """Full state derivative x_dot = f(x, u); ``ground=None`` disables contact."""
    x = as_state_array(state)
    u = np.asarray(getattr(control, "as_array", lambda: control)(), dtype=float)
    pos, vel, offsets, R = foot_kinematics(x, params)
    pos, vel = pos.tolist(), vel.tolist()
    w = x[OMEGA]

    gen = np.zeros(6)
    if ground is not None:
        for i in range(4):
            fx, fy, fz, _ = ground_force_components(pos[i], vel[i], ground, smoothing)
            if fx or fy or fz:
                F = np.array([fx, fy, fz])
                gen[:3] += F
                # B_i^T F: moment part is r x (R^T F) in the body frame
                gen[3:] += _cross(offsets[i], R.T @ F)

    gen[:3] += R @ u[0:3]
    gen[3:] += u[3:6]
    gen[:3] += params.mass * params.gravity
    gen[3:] -= _cross(w, params.inertia @ w)
    # D is block diagonal: scalar mass and a symmetric solve against I_B
    vdot = np.empty(6)
    vdot[:3] = gen[:3] / params.mass
    vdot[3:] = cho_solve(cho_factor(params.inertia, check_finite=False), gen[3:], check_finite=False)

    xdot = np.empty(NX)
    xdot[POS] = x[VEL]
    xdot[ANG] = euler_rates(x[ANG], w, eps_pitch)
    xdot[QL] = x[QLD]
    xdot[18:24] = vdot
    xdot[QLD] = u[6:18]
    return xdot


def mechanical_energy(state, params: RobotParams):
    x = as_state_array(state)
    v, w = x[VEL], x[OMEGA]
    kinetic = 0.5 * params.mass * v @ v + 0.5 * w @ params.inertia @ w
    potential = -params.mass * x[POS] @ params.gravity
    return kinetic + potential
