"""Fixed-step RK4 simulation with a pose-error thrust controller."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    ControlInput,
    Wrench,
    contact_forces,
    dynamics_rhs,
    foot_kinematics,
    thruster_wrench,
    wrench_allocation,
)
from .errors import HROMError, NearSingular, NonFinite
from .gait import GaitPlan, TrackingGains, joint_reference, joint_tracking
from .kinematics import euler_to_rotation, rotation_to_euler, wrap_angle
from .params import GroundParams, RobotParams
from .state import ANG, NU, NX, OMEGA, QL, QLD, EulerAngles, FullState, as_state_array

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 3.5
    kp_att: np.ndarray = field(default_factory=lambda: np.full(3, 30.0))
    kd_att: np.ndarray = field(default_factory=lambda: np.full(3, 5.0))
    reference: EulerAngles = EulerAngles()
    initial_state: np.ndarray | None = None
    thrust_feedforward: float = 0.3
    thrust_enabled: bool = True
    contact_enabled: bool = True
    tracking: TrackingGains = field(default_factory=TrackingGains)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least one step")
        object.__setattr__(self, "kp_att", np.broadcast_to(np.asarray(self.kp_att, float), (3,)).copy())
        object.__setattr__(self, "kd_att", np.broadcast_to(np.asarray(self.kd_att, float), (3,)).copy())
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", as_state_array(self.initial_state).copy())

    @property
    def steps(self):
        return int(round(self.duration / self.dt))


@dataclass
class Trajectory:
    t: np.ndarray  # (N,)
    states: np.ndarray  # (N, 36)
    controls: np.ndarray  # (N, 18)
    grf: np.ndarray  # (N, 4, 3)
    contact: np.ndarray  # (N, 4) bool
    thrust: np.ndarray  # (N, 4)
    status: str = "ok"
    message: str = ""

    def __len__(self):
        return len(self.t)

    @property
    def wrench(self):
        return self.controls[:, :6]

    @property
    def aborted(self):
        return self.status != "ok"

    def state(self, k) -> FullState:
        return FullState.from_array(self.states[k])

    def control(self, k) -> ControlInput:
        return ControlInput.from_array(self.controls[k])


def rk4_step(f, x, u, dt):
    """Classical RK4 with ``u`` held over the step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = f(x, u)
    k2 = f(x + 0.5 * dt * k1, u)
    k3 = f(x + 0.5 * dt * k2, u)
    k4 = f(x + dt * k3, u)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFinite("RK4 step produced a non-finite state")
    return out


def attitude_error(x, reference: EulerAngles):
    """Reference minus measured Euler angles, ordered along body axes (roll, pitch, yaw)."""
    angles = rotation_to_euler(euler_to_rotation(x[ANG]))
    ref = reference.as_array()
    yaw_e, pitch_e, roll_e = (wrap_angle(r - a) for r, a in zip(ref, angles))
    return np.array([roll_e, pitch_e, yaw_e])


def attitude_thrust_controller(state, config: SimConfig, robot: RobotParams):
    """Applied (Wrench, ThrusterForces) from the attitude error and body rates.

    The logged wrench is always the re-condensed allocation, so saturation is
    reflected in what is applied rather than what was asked for.
    """
    x = as_state_array(state)
    if abs(math.cos(x[4])) < 0.1:
        raise NearSingular(f"pitch {x[4]:.4f} rad too close to gimbal lock")
    moment = config.kp_att * attitude_error(x, config.reference) - config.kd_att * x[OMEGA]
    desired = Wrench(np.array([0.0, 0.0, config.thrust_feedforward * robot.weight]), moment)
    forces = wrench_allocation(desired, robot)
    return thruster_wrench(forces, robot, check=False), forces


def static_sink(robot: RobotParams, ground: GroundParams, thrust_fraction, feet=4):
    """Ground penetration supporting the body weight (less thrust) on ``feet`` feet."""
    return (1.0 - thrust_fraction) * robot.weight / (feet * ground.k_gz)


def initial_state(gait: GaitPlan, robot: RobotParams, ground: GroundParams, thrust_fraction=0.3):
    """Zero-velocity state with joints on the gait reference and feet in static support."""
    q, qd, _ = joint_reference(0.0, gait)
    x = np.zeros(NX)
    x[2] = ground.ground_height + gait.params.stance_height - static_sink(robot, ground, thrust_fraction)
    x[QL] = q.reshape(12)
    x[QLD] = qd.reshape(12)
    return x


def simulate(config: SimConfig, gait: GaitPlan, robot: RobotParams, ground: GroundParams | None):
    """March the closed loop forward; aborts return the partial trajectory."""
    steps = config.steps
    dt = config.dt
    if not config.contact_enabled:
        ground = None
    if config.initial_state is not None:
        x = config.initial_state.copy()
    else:
        x = initial_state(gait, robot, ground or GroundParams(), config.thrust_feedforward)

    t = np.empty(steps + 1)
    X = np.empty((steps + 1, NX))
    U = np.empty((steps + 1, NU))
    GRF = np.zeros((steps + 1, 4, 3))
    C = np.zeros((steps + 1, 4), dtype=bool)
    TH = np.zeros((steps + 1, 4))

    def f(xx, uu):
        return dynamics_rhs(xx, uu, robot, ground)

    status, message = "ok", ""
    n = 0
    for k in range(steps + 1):
        tk = k * dt
        try:
            u = np.zeros(NU)
            ref = joint_reference(min(tk, gait.duration), gait)
            u[6:] = joint_tracking(x[QL], x[QLD], ref, config.tracking)
            if config.thrust_enabled:
                wrench, forces = attitude_thrust_controller(x, config, robot)
                u[:6] = wrench.as_array()
                TH[k] = forces.forces
            if ground is not None:
                GRF[k], C[k] = contact_forces(x, robot, ground)
            t[k], X[k], U[k] = tk, x, u
            n = k + 1
            if k < steps:
                x = rk4_step(f, x, u, dt)
        except HROMError as exc:
            status, message = type(exc).__name__, f"t={tk:.4f}: {exc}"
            log.warning("simulation aborted at %s", message)
            break

    return Trajectory(t[:n], X[:n], U[:n], GRF[:n], C[:n], TH[:n], status, message)


def foot_states(traj: Trajectory, robot: RobotParams):
    """World foot positions and velocities along a trajectory, each (N, 4, 3)."""
    P = np.empty((len(traj), 4, 3))
    V = np.empty((len(traj), 4, 3))
    for k, x in enumerate(traj.states):
        P[k], V[k], _, _ = foot_kinematics(x, robot)
    return P, V


def stance_slip(traj: Trajectory, robot: RobotParams, normal_threshold=1.0):
    """Horizontal foot drift over each contiguous loaded interval.

    Returns a list of (leg_index, t_start, t_end, drift) where drift is the
    largest horizontal distance from the foot's position at load-up.
    """
    P, _ = foot_states(traj, robot)
    loaded = traj.grf[:, :, 2] > normal_threshold
    out = []
    for i in range(4):
        k = 0
        n = len(traj)
        while k < n:
            if not loaded[k, i]:
                k += 1
                continue
            start = k
            while k < n and loaded[k, i]:
                k += 1
            seg = P[start:k, i, :2]
            drift = float(np.max(np.linalg.norm(seg - seg[0], axis=1)))
            out.append((i, float(traj.t[start]), float(traj.t[k - 1]), drift))
    return out
