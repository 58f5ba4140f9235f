"""The acceptance suite as named checks, shared by ``hrom verify`` and the tests.

Each check returns a :class:`CheckResult`. Checks that need the run
configuration (the walking scenario, the GRF formula, determinism) read it from
the :class:`VerifyContext`; when the configuration cannot be built those checks
fail with the configuration error as their detail.
"""

from __future__ import annotations

import filecmp
import tempfile
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .config import RunConfig, load_config
from .contact import ground_force_components
from .dynamics import dynamics_rhs, mechanical_energy
from .errors import HROMError, SolverError
from .gait import build_gait
from .kinematics import (euler_to_rotation, foot_jacobian, foot_position_world, leg_inverse_kinematics,
                         leg_vector, rotation_to_euler, skew)
from .params import RobotParams
from .sim import rk4_step, simulate, stance_slip
from .state import ANG, NU, NX, OMEGA
from .trajopt.collocation import DecisionVector, defects, state_interp
from .trajopt.problems import (CostWeights, ProblemSpec, double_integrator_guess,
                               double_integrator_problem, hrom_problem, pin_joint_inputs,
                               seed_from_simulation)
from .trajopt.solver import SolverOptions, evaluate, nlp_solve, total_violation

THRUST_LIMIT_N = 78.45


def bundled_config(name="paper_walk.cfg") -> Path:
    return Path(str(resources.files("hrom") / "data" / name))


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} {self.detail}"


@dataclass
class VerifyContext:
    config_path: Path = field(default_factory=bundled_config)
    config: RunConfig | None = None
    config_error: str | None = None
    _walk: tuple | None = None

    def __post_init__(self):
        if self.config is None and self.config_error is None:
            try:
                self.config = load_config(self.config_path)
            except HROMError as exc:
                self.config_error = str(exc)

    def require_config(self):
        if self.config is None:
            raise _Unavailable(f"config unusable: {self.config_error}")
        return self.config

    def walk(self):
        """The walking run of the config, simulated once and shared by several checks."""
        if self._walk is None:
            cfg = self.require_config()
            t0 = time.perf_counter()
            gait = build_gait(cfg.gait, cfg.robot)
            traj = simulate(cfg.sim, gait, cfg.robot, cfg.ground)
            self._walk = (traj, time.perf_counter() - t0)
        return self._walk


class _Unavailable(Exception):
    pass


def check_walking(ctx):
    traj, seconds = ctx.walk()
    disp = traj.states[-1, 0] - traj.states[0, 0]
    ok = (not traj.aborted) and abs(disp - 0.30) <= 0.3 * 0.30 and seconds < 60.0
    return ok, f"displacement {disp:.4f} m over {traj.t[-1]:.2f} s (target 0.30 +/- 30%), {seconds:.1f} s wall"


def check_attitude(ctx):
    traj, _ = ctx.walk()
    roll = np.max(np.abs(traj.states[:, ANG][:, 2]))
    pitch = np.max(np.abs(traj.states[:, ANG][:, 1]))
    rate = np.max(np.linalg.norm(traj.states[:, OMEGA], axis=1))
    ok = (not traj.aborted) and roll < 0.2 and pitch < 0.2 and rate < 2.0
    return ok, f"max |roll| {roll:.4f}, |pitch| {pitch:.4f} rad, |w| {rate:.3f} rad/s"


def check_thrust_budget(ctx):
    traj, _ = ctx.walk()
    total = traj.thrust.sum(axis=1).max()
    return bool(total <= THRUST_LIMIT_N), f"max total thrust {total:.3f} N (limit {THRUST_LIMIT_N} N)"


def check_slip(ctx):
    traj, _ = ctx.walk()
    cfg = ctx.require_config()
    drifts = [d for (_, _, _, d) in stance_slip(traj, cfg.robot, normal_threshold=1.0)]
    worst = max(drifts, default=0.0)
    return bool(drifts) and worst < 5e-3, f"worst stance drift {worst * 1e3:.3f} mm over {len(drifts)} stances"


def check_conservation(ctx):
    robot = RobotParams()
    x = np.zeros(NX)
    x[2] = 1.0
    x[ANG] = [0.3, 0.2, np.pi / 2]
    x[OMEGA] = [3.0, 0.4, -0.6]
    u = np.zeros(NU)

    def f(state, control):
        return dynamics_rhs(state, control, robot, None)

    e0 = mechanical_energy(x, robot)
    I = robot.inertia
    h0 = np.linalg.norm(I @ x[OMEGA])
    e_err = h_err = 0.0
    for _ in range(1000):
        x = rk4_step(f, x, u, 1e-3)
        e_err = max(e_err, abs(mechanical_energy(x, robot) - e0) / abs(e0))
        h_err = max(h_err, abs(np.linalg.norm(I @ x[OMEGA]) - h0) / h0)
    return e_err < 1e-6 and h_err < 1e-6, f"energy drift {e_err:.2e}, |I w| drift {h_err:.2e} (relative)"


def check_grf(ctx):
    ground = ctx.require_config().ground
    fx, fy, fz, contact = ground_force_components((0.0, 0.0, -0.001), (0.0, 0.0, 0.0), ground)
    air = ground_force_components((0.0, 0.0, 0.01), (0.3, -0.2, -0.5), ground)
    ok = abs(fz - 8.0) <= 1e-12 and contact and fx == 0.0 and fy == 0.0 and air == (0.0, 0.0, 0.0, False)
    return ok, f"u_z(z=-1 mm) = {fz!r} N, airborne force {air[:3]}"


def check_kinematics(ctx):
    seed = ctx.config.seed if ctx.config is not None else 0
    rng = np.random.default_rng(seed)
    robot = RobotParams()
    lo, hi = robot.leg_length_limits
    worst_rt = 0.0
    for _ in range(1000):
        d = rng.normal(size=3)
        d[2] = -abs(d[2]) - 0.2
        d *= rng.uniform(lo * 1.05, hi * 0.95) / np.linalg.norm(d)
        q = leg_inverse_kinematics(d, robot.leg_length_limits)
        worst_rt = max(worst_rt, np.max(np.abs(leg_vector(*q) - d)))
    worst_j = 0.0
    for _ in range(50):
        angles = rng.uniform([-np.pi, -1.0, -1.0], [np.pi, 1.0, 1.0])
        q = rng.uniform([-0.6, -0.6, 0.15], [0.6, 0.6, 0.4])
        p = rng.normal(size=3)
        leg = int(rng.integers(4))
        J = foot_jacobian(angles, robot, q, leg)
        J_fd = np.zeros((3, 6))
        for k in range(6):
            h = 1e-6
            dp = np.zeros(6)
            dp[k] = h
            J_fd[:, k] = (_foot_perturbed(p, angles, robot, q, leg, dp)
                          - _foot_perturbed(p, angles, robot, q, leg, -dp)) / (2 * h)
        worst_j = max(worst_j, np.max(np.abs(J - J_fd)) / max(1.0, np.max(np.abs(J))))
    ok = worst_rt < 1e-10 and worst_j < 1e-6
    return ok, f"FK(IK) error {worst_rt:.1e} m over 1000 targets, Jacobian vs FD {worst_j:.1e}"


def _foot_perturbed(p, angles, robot, q, leg, dp):
    """Foot position after translating the body by dp[:3] and rotating it by dp[3:] in the body frame."""
    R = euler_to_rotation(angles) @ expm(skew(dp[3:]))
    return foot_position_world(p + dp[:3], rotation_to_euler(R), robot, q, leg)


def check_interpolants(ctx):
    rng = np.random.default_rng(1)
    worst_end = 0.0
    for _ in range(200):
        xj, xn, fj, fn = rng.normal(size=(4, 5))
        tj = rng.uniform(-1, 1)
        tn = tj + rng.uniform(0.01, 2)
        a, da = state_interp(xj, xn, fj, fn, tj, tn, tj)
        b, db = state_interp(xj, xn, fj, fn, tj, tn, tn)
        worst_end = max(worst_end, *(np.max(np.abs(v)) for v in (a - xj, b - xn, da - fj, db - fn)))
    c = rng.normal(size=4)
    poly = np.polynomial.Polynomial(c)
    dpoly = poly.deriv()
    t0, t1 = 0.3, 1.1
    ts = np.linspace(t0, t1, 17)
    worst_cubic = max(
        abs(state_interp(np.array([poly(t0)]), np.array([poly(t1)]), np.array([dpoly(t0)]),
                         np.array([dpoly(t1)]), t0, t1, t)[0][0] - poly(t)) for t in ts)
    order = defect_order()
    ok = worst_end < 1e-12 and worst_cubic < 1e-12 and order >= 3.0
    return ok, f"endpoint error {worst_end:.1e}, cubic error {worst_cubic:.1e}, defect order {order:.2f}"


LINEAR_TEST_MATRIX = np.array([[0.0, 1.0], [-4.0, -0.4]])


def defect_order(grids=(11, 21, 41)):
    """Observed convergence order of the max defect on samples of an exact linear trajectory."""
    A = LINEAR_TEST_MATRIX
    x0 = np.array([1.0, 0.0])
    T = 2.0

    def dyn(x, u, t):
        return A @ x

    norms = []
    for n in grids:
        ts = np.linspace(0.0, T, n)
        X = np.array([expm(A * t) @ x0 for t in ts])
        dv = DecisionVector(X, np.zeros((n, 1)), T)
        norms.append(np.max(np.abs(defects(dv, dyn))))
    ratios = [np.log2(norms[i] / norms[i + 1]) for i in range(len(norms) - 1)]
    return float(min(ratios))


def check_double_integrator(ctx):
    t0 = time.perf_counter()
    nlp = double_integrator_problem(n=11)
    try:
        dv, report = nlp_solve(nlp, double_integrator_guess(n=11))
    except SolverError as exc:
        return False, f"solver failed: {exc}"
    seconds = time.perf_counter() - t0
    ok = abs(report.cost - 12.0) <= 0.02 * 12.0 and report.constraint_violation < 1e-4 and seconds < 30.0
    return ok, (f"cost {report.cost:.6f} (analytic 12), violation {report.constraint_violation:.1e}, "
                f"{seconds:.1f} s")


def hrom_smoke(config: RunConfig, n=21, options=None):
    """Warm-start the HROM collocation problem from a simulation and solve it.

    Returns (decision, report, warm-start cost, warm-start violation, seconds).
    """
    t0 = time.perf_counter()
    opt = config.opt
    gait = build_gait(config.gait, config.robot)
    traj = simulate(replace(config.sim, duration=opt.horizon), gait, config.robot, config.ground)
    if traj.aborted:
        raise HROMError(f"warm-start simulation aborted: {traj.message}")
    seed = seed_from_simulation(traj, n, opt.horizon)
    spec = ProblemSpec(n=n, initial_state=traj.states[0], reference=config.sim.reference,
                       v_ref=config.gait.forward_velocity_ref, terminal=opt.terminal,
                       tf_bounds=opt.tf_bounds, penalize=opt.penalize,
                       free_joint_inputs=opt.free_joint_inputs, smoothing=opt.smoothing)
    weights = hrom_weights(opt)
    nlp = hrom_problem(spec, weights, config.robot, config.ground, gait)
    if not opt.free_joint_inputs:
        pin_joint_inputs(nlp, seed)
    ev0 = evaluate(nlp, seed.flatten())
    options = options or SolverOptions(tol_c=opt.tol_c, tol_g=opt.tol_g, max_iter=opt.max_iter,
                                       time_limit=opt.time_limit)
    try:
        dv, report = nlp_solve(nlp, seed, options)
    except SolverError as exc:
        if exc.report is None:
            raise
        dv, report = exc.best, exc.report
    return dv, report, ev0.cost, total_violation(nlp, seed.flatten(), ev0), time.perf_counter() - t0


def hrom_weights(opt):
    size = 4 if opt.penalize == "edf" else 6
    return CostWeights(Q=opt.q_weight * np.eye(3), R=opt.r_weight * np.eye(size))


def check_hrom_smoke(ctx):
    cfg = ctx.require_config()
    dv, report, c0, v0, seconds = hrom_smoke(cfg, n=21)
    ok = report.constraint_violation < 1e-3 and report.cost <= c0 and seconds < 600.0
    return ok, (f"violation {v0:.2e} -> {report.constraint_violation:.2e}, cost {c0:.4f} -> {report.cost:.4f}, "
                f"{report.iterations} iterations, {seconds:.0f} s ({report.status})")


def check_determinism(ctx):
    from .cli import cmd_simulate  # cli depends on this module

    ctx.require_config()
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        codes = (cmd_simulate(ctx.config_path, out=a), cmd_simulate(ctx.config_path, out=b))
        names = sorted(p.name for p in a.glob("*.csv"))
        same = [filecmp.cmp(a / nm, b / nm, shallow=False) for nm in names]
    ok = codes == (0, 0) and bool(names) and all(same)
    return ok, f"exit codes {codes}, {sum(same)}/{len(names)} CSV files byte-identical"


CHECKS = [
    ("sim.walking_displacement", check_walking),
    ("sim.attitude_stability", check_attitude),
    ("sim.thrust_budget", check_thrust_budget),
    ("sim.stance_slip", check_slip),
    ("dynamics.energy_conservation", check_conservation),
    ("contact.grf_formula", check_grf),
    ("kinematics.ik_roundtrip_jacobian", check_kinematics),
    ("trajopt.interpolants", check_interpolants),
    ("trajopt.double_integrator", check_double_integrator),
    ("trajopt.hrom_smoke", check_hrom_smoke),
    ("cli.determinism", check_determinism),
]


def run_check(name, ctx: VerifyContext) -> CheckResult:
    func = dict(CHECKS)[name]
    t0 = time.perf_counter()
    try:
        ok, detail = func(ctx)
    except _Unavailable as exc:
        ok, detail = False, str(exc)
    except (HROMError, ValueError, ArithmeticError) as exc:
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def run_suite(ctx: VerifyContext | None = None, name_filter: str | None = None):
    ctx = ctx or VerifyContext()
    names = [n for n, _ in CHECKS if not name_filter or name_filter in n]
    return [run_check(n, ctx) for n in names]
