"""Ready-made collocation problems: a double-integrator oracle and the HROM walk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..contact import ContactSmoothing
from ..dynamics import allocation_matrix, contact_forces, dynamics_rhs
from ..errors import HROMError, TooShort
from ..gait import GaitPlan, TrackingGains, joint_reference, joint_tracking
from ..kinematics import euler_to_rotation, rotation_to_euler, wrap_angle
from ..params import GroundParams, RobotParams
from ..sim import Trajectory
from ..state import NU, NX, QL, QLD, EulerAngles
from .collocation import DecisionVector
from .solver import CollocationNLP


def double_integrator_problem(n=11, final_time=1.0, target=1.0):
    """Rest-to-rest transfer of x'' = u from 0 to ``target`` minimizing the integral of u^2.

    The exact minimum is 12 target^2 / T^3 with u(t) = (6 - 12 t/T) target / T^2; both
    the optimal state (cubic) and control (linear) lie in the interpolant spaces,
    so the transcription reproduces it exactly.
    """

    def dynamics(x, u, t):
        return np.array([x[1], u[0]])

    def cost_residuals(dv):
        h = dv.final_time / (dv.n - 1)
        u = dv.controls[:, 0]
        a, b = u[:-1], u[1:]
        # h/3 (a^2 + ab + b^2) = h/4 (a + b)^2 + h/12 (a - b)^2
        return np.column_stack([np.sqrt(h / 4.0) * (a + b), np.sqrt(h / 12.0) * (a - b)])

    def boundary(dv):
        return np.concatenate([dv.states[0] - [0.0, 0.0], dv.states[-1] - [target, 0.0]])

    size = n * 3 + 1
    lower = np.full(size, -np.inf)
    upper = np.full(size, np.inf)
    lower[-1] = upper[-1] = final_time
    return CollocationNLP(
        n=n, nx=2, nu=1, dynamics=dynamics, cost_residuals=cost_residuals,
        cost_stencil="interval", boundary=boundary, boundary_nodes=(0, n - 1),
        lower=lower, upper=upper,
    )


def double_integrator_guess(n=11, final_time=1.0, target=1.0):
    """Straight-line position guess with zero control."""
    s = np.linspace(0.0, 1.0, n)
    X = np.column_stack([target * s, np.full(n, target / final_time)])
    return DecisionVector(X, np.zeros((n, 1)), final_time)


# --- HROM walking problem -------------------------------------------------

TERMINAL_CHOICES = ("displacement", "attitude", "roll", "pitch", "yaw", "lateral")


@dataclass(frozen=True)
class CostWeights:
    Q: np.ndarray = field(default_factory=lambda: np.eye(3))
    R: np.ndarray = field(default_factory=lambda: 1e-3 * np.eye(4))

    def __post_init__(self):
        for name in ("Q", "R"):
            M = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if M.shape[0] != M.shape[1] or not np.allclose(M, M.T):
                raise ValueError(f"{name} must be a symmetric square matrix")
            if np.linalg.eigvalsh(M).min() <= 0:
                raise ValueError(f"{name} must be positive definite")
            object.__setattr__(self, name, M)
        if self.Q.shape != (3, 3):
            raise ValueError("Q weights the 3-vector attitude error")
        if self.R.shape not in ((4, 4), (6, 6)):
            raise ValueError("R weights either the 4 EDF forces or the 6-D wrench")


@dataclass(frozen=True)
class ProblemSpec:
    n: int = 21
    initial_state: np.ndarray | None = None
    reference: EulerAngles = EulerAngles()
    v_ref: float = 0.1
    terminal: tuple = ("displacement", "attitude", "lateral")
    tf_bounds: tuple = (0.5, 10.0)
    penalize: str = "edf"
    free_joint_inputs: bool = False
    moment_bound: float | None = None
    smoothing: ContactSmoothing | None = ContactSmoothing()

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid size n must be at least 2, got {self.n}")
        lo, hi = self.tf_bounds
        if not 0 < lo <= hi:
            raise ValueError(f"bad final-time bounds {self.tf_bounds}")
        bad = set(self.terminal) - set(TERMINAL_CHOICES)
        if bad:
            raise ValueError(f"unknown terminal conditions {sorted(bad)}")
        if self.penalize not in ("edf", "wrench"):
            raise ValueError("penalize must be 'edf' or 'wrench'")


def edf_map(robot: RobotParams):
    """4x3 minimum-norm map from (Fz, Mx, My) to EDF forces."""
    A = allocation_matrix(robot)
    return np.linalg.pinv(A[[2, 3, 4]])


def attitude_residual(x, reference: EulerAngles):
    """Reference-minus-measured Euler angles along body axes (roll, pitch, yaw)."""
    angles = rotation_to_euler(euler_to_rotation(x[3:6]))
    ref = reference.as_array()
    yaw_e, pitch_e, roll_e = (wrap_angle(r - a) for r, a in zip(ref, angles))
    return np.array([roll_e, pitch_e, yaw_e])


def cost(decision: DecisionVector, weights: CostWeights, robot: RobotParams,
         reference: EulerAngles = EulerAngles()):
    """Sum over grid nodes of x_e' Q x_e + (thrust)' R (thrust)."""
    r = _cost_residuals(decision, weights, robot, reference)
    return float(np.sum(r * r))


def _cost_residuals(dv, weights, robot, reference):
    LQ = np.linalg.cholesky(weights.Q)
    LR = np.linalg.cholesky(weights.R)
    P = edf_map(robot)
    rows = []
    for x, u in zip(dv.states, dv.controls):
        e = LQ.T @ attitude_residual(x, reference)
        thrust = P @ u[[2, 3, 4]] if weights.R.shape == (4, 4) else u[:6]
        rows.append(np.concatenate([e, LR.T @ thrust]))
    return np.array(rows)


class HROMDynamics:
    """x_dot = f(x, u, t) with joint inputs from the gait tracking law unless freed."""

    def __init__(self, robot, ground, gait: GaitPlan, free_joint_inputs=False, tracking=None,
                 smoothing=None):
        self.robot, self.ground, self.gait = robot, ground, gait
        self.smoothing = smoothing
        self.free_joint_inputs = free_joint_inputs
        self.tracking = tracking or TrackingGains()
        self._refs = {}

    def reference(self, t):
        t = min(max(float(t), 0.0), self.gait.duration)
        ref = self._refs.get(t)
        if ref is None:
            ref = joint_reference(t, self.gait)
            if len(self._refs) > 4096:
                self._refs.clear()
            self._refs[t] = ref
        return ref

    def joint_inputs(self, x, t):
        return joint_tracking(x[QL], x[QLD], self.reference(t), self.tracking)

    def __call__(self, x, u, t):
        if not self.free_joint_inputs:
            u = np.concatenate([u[:6], self.joint_inputs(x, t)])
        try:
            return dynamics_rhs(x, u, self.robot, self.ground, smoothing=self.smoothing)
        except HROMError:
            return np.full(NX, np.nan)


def hrom_problem(spec: ProblemSpec, weights: CostWeights, robot: RobotParams,
                 ground: GroundParams, gait: GaitPlan):
    """Transcribe the thrust-stabilized walk into a :class:`CollocationNLP`."""
    if spec.initial_state is None:
        raise ValueError("the HROM problem pins the initial state; none given")
    x_init = np.asarray(spec.initial_state, dtype=float)
    n = spec.n
    if (weights.R.shape == (4, 4)) != (spec.penalize == "edf"):
        raise ValueError("R dimension does not match the penalize setting")
    dyn = HROMDynamics(robot, ground, gait, spec.free_joint_inputs, smoothing=spec.smoothing)
    P = edf_map(robot)
    fmax = robot.max_thrust_per_edf
    ref = spec.reference.as_array()

    def boundary(dv):
        res = [dv.states[0] - x_init]
        xN = dv.states[-1]
        if "displacement" in spec.terminal:
            res.append([xN[0] - dv.states[0][0] - spec.v_ref * dv.final_time])
        if "lateral" in spec.terminal:
            res.append([xN[1]])
        angles = rotation_to_euler(euler_to_rotation(xN[3:6]))
        names = ("yaw", "pitch", "roll")
        for i, name in enumerate(names):
            if "attitude" in spec.terminal or name in spec.terminal:
                res.append([wrap_angle(angles[i] - ref[i])])
        return np.concatenate(res)

    def inequality(dv):
        f = dv.controls[:, [2, 3, 4]] @ P.T
        return np.hstack([f, fmax - f])

    def cost_residuals(dv):
        return _cost_residuals(dv, weights, robot, spec.reference)

    size = n * (NX + NU) + 1
    lower = np.full(size, -np.inf)
    upper = np.full(size, np.inf)
    ctrl = n * NX + np.arange(n)[:, None] * NU
    m_bound = spec.moment_bound
    if m_bound is None:
        A = allocation_matrix(robot)
        m_bound = float(np.abs(A[3:5]).sum(axis=1).max() * fmax)
    for comp, (lo, hi) in {0: (0.0, 0.0), 1: (0.0, 0.0), 5: (0.0, 0.0),
                           2: (0.0, robot.thrust_budget), 3: (-m_bound, m_bound),
                           4: (-m_bound, m_bound)}.items():
        lower[ctrl[:, 0] + comp] = lo
        upper[ctrl[:, 0] + comp] = hi
    lower[-1], upper[-1] = spec.tf_bounds
    nlp = CollocationNLP(
        n=n, nx=NX, nu=NU, dynamics=dyn, cost_residuals=cost_residuals, cost_stencil="node",
        boundary=boundary, boundary_nodes=(0, n - 1), inequality=inequality,
        lower=lower, upper=upper,
    )
    nlp.joint_slots = (ctrl[:, 0][:, None] + np.arange(6, NU)).ravel()
    return nlp


def pin_joint_inputs(nlp: CollocationNLP, guess: DecisionVector):
    """Freeze the inert joint-input slots at the guess values (tracking-law mode)."""
    y = guess.flatten()
    slots = nlp.joint_slots
    nlp.lower[slots] = y[slots]
    nlp.upper[slots] = y[slots]
    return nlp


def seed_from_simulation(traj, n, horizon=None):
    """Resample a simulated trajectory onto an n-node uniform grid over [0, horizon]."""
    if n < 2:
        raise ValueError(f"grid size n must be at least 2, got {n}")
    t_end = float(traj.t[-1])
    horizon = t_end if horizon is None else float(horizon)
    if horizon > t_end + 1e-9:
        raise TooShort(f"trajectory ends at {t_end} s, horizon {horizon} s requested")
    dt = float(traj.t[1] - traj.t[0])
    pos = np.linspace(0.0, horizon, n) / dt
    X = np.empty((n, traj.states.shape[1]))
    U = np.empty((n, traj.controls.shape[1]))
    last = len(traj) - 1
    for k, p in enumerate(pos):
        i = int(math.floor(p + 1e-9))
        w = p - i
        if abs(w) < 1e-9 or i >= last:
            i = min(i, last)
            X[k], U[k] = traj.states[i], traj.controls[i]
        else:
            X[k] = (1 - w) * traj.states[i] + w * traj.states[i + 1]
            U[k] = (1 - w) * traj.controls[i] + w * traj.controls[i + 1]
    return DecisionVector(X, U, horizon)


def solution_trajectory(decision: DecisionVector, dynamics: HROMDynamics):
    """Node-grid Trajectory of an HROM solution for export in the simulator's schema.

    Joint inputs come from the tracking law when they are not decision variables;
    GRF and contact flags use the exact (unsmoothed) ground model.
    """
    n = decision.n
    P = edf_map(dynamics.robot)
    controls = decision.controls.copy()
    grf = np.zeros((n, 4, 3))
    contact = np.zeros((n, 4), bool)
    for k, (x, t) in enumerate(zip(decision.states, decision.times)):
        if not dynamics.free_joint_inputs:
            controls[k, 6:] = dynamics.joint_inputs(x, t)
        F, flags = contact_forces(x, dynamics.robot, dynamics.ground)
        grf[k], contact[k] = F, flags
    thrust = controls[:, [2, 3, 4]] @ P.T
    return Trajectory(decision.times.copy(), decision.states.copy(), controls, grf, contact, thrust)
