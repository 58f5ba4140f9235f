import math

import numpy as np
import pytest

from hrom.dynamics import ControlInput, Wrench, contact_forces, dynamics_rhs, thruster_wrench
from hrom.errors import NearSingular, NonFinite
from hrom.gait import GaitParams, build_gait
from hrom.sim import (SimConfig, attitude_thrust_controller, initial_state, rk4_step, simulate,
                      stance_slip)
from hrom.state import NU, NX, EulerAngles


def decay(x, u):
    return -x


# -- RK4 --------------------------------------------------------------------

def test_rk4_zero_derivative():
    x = np.arange(5.0)
    assert np.array_equal(rk4_step(lambda x, u: np.zeros_like(x), x, None, 0.1), x)


def test_rk4_exponential_step():
    x1 = rk4_step(decay, np.array([1.0]), None, 0.1)[0]
    assert x1 == pytest.approx(0.9048375, abs=1e-7)
    assert abs(x1 - math.exp(-0.1)) < 1e-7


def test_rk4_fourth_order():
    def error(dt):
        x = np.array([1.0])
        for _ in range(int(round(1.0 / dt))):
            x = rk4_step(decay, x, None, dt)
        return abs(x[0] - math.exp(-1.0))

    ratio = error(0.1) / error(0.05)
    assert 14.0 < ratio < 18.0


def test_rk4_holds_control():
    seen = []

    def f(x, u):
        seen.append(u)
        return u * np.ones_like(x)

    x = rk4_step(f, np.zeros(2), 3.0, 0.5)
    assert seen == [3.0] * 4
    assert np.allclose(x, 1.5)


def test_rk4_non_finite():
    with pytest.raises(NonFinite):
        rk4_step(lambda x, u: np.full_like(x, np.inf), np.zeros(2), None, 0.1)


def test_rk4_rejects_bad_step():
    with pytest.raises(ValueError):
        rk4_step(decay, np.ones(1), None, 0.0)


# -- configuration -----------------------------------------------------------

@pytest.mark.parametrize("kw", [{"dt": 0.0}, {"dt": -1e-3}, {"dt": 0.01, "duration": 0.005}])
def test_invalid_sim_config(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


# -- controller ---------------------------------------------------------------

def test_controller_feedforward_only(robot):
    wrench, forces = attitude_thrust_controller(np.zeros(NX), SimConfig(), robot)
    assert np.allclose(wrench.moment, 0.0, atol=1e-12)
    assert wrench.force[2] == pytest.approx(0.3 * robot.weight)
    assert forces.total == pytest.approx(0.3 * robot.weight)


def test_controller_roll_gain(robot):
    x = np.zeros(NX)
    x[5] = -0.1  # measured roll, reference 0 gives error +0.1
    wrench, _ = attitude_thrust_controller(x, SimConfig(kp_att=20.0), robot)
    assert np.allclose(wrench.moment, [2.0, 0.0, 0.0], atol=1e-9)


def test_controller_saturation_logs_applied_wrench(robot):
    x = np.zeros(NX)
    x[5] = 1.0
    wrench, forces = attitude_thrust_controller(x, SimConfig(kp_att=500.0), robot)
    assert forces.saturated
    assert np.all((forces.forces >= 0.0) & (forces.forces <= robot.max_thrust_per_edf))
    applied = thruster_wrench(forces, robot)
    assert np.allclose(wrench.as_array(), applied.as_array(), atol=1e-12)
    assert abs(wrench.moment[0]) < 500.0


def test_controller_guards_gimbal_lock(robot):
    x = np.zeros(NX)
    x[4] = 0.5 * math.pi - 0.05
    with pytest.raises(NearSingular):
        attitude_thrust_controller(x, SimConfig(), robot)


# -- simulation -----------------------------------------------------------------

def test_trajectory_shape_and_uniform_time(walk):
    n = len(walk)
    assert n == 3501 and not walk.aborted
    assert walk.states.shape == (n, NX) and walk.controls.shape == (n, NU)
    assert walk.grf.shape == (n, 4, 3) and walk.thrust.shape == (n, 4)
    assert np.allclose(np.diff(walk.t), 1e-3, atol=1e-12)
    assert np.all(np.isfinite(walk.states))
    assert isinstance(walk.control(10), ControlInput)


def test_logged_wrench_matches_thrust(walk, robot):
    for k in range(0, len(walk), 250):
        applied = thruster_wrench(walk.thrust[k], robot, check=False)
        assert np.allclose(walk.wrench[k], applied.as_array(), atol=1e-9)


def test_static_balance(robot, ground):
    standing = build_gait(GaitParams(forward_velocity_ref=0.0, duration=3.0), robot, standing=True)
    cfg = SimConfig(duration=3.0, thrust_enabled=False)
    traj = simulate(cfg, standing, robot, ground)
    assert not traj.aborted
    total = traj.grf[-200:, :, 2].sum(axis=1)
    assert np.all(np.abs(total - robot.weight) < 0.01 * robot.weight)
    assert np.max(np.abs(traj.states[-200:, 18:21])) < 1e-3


def test_free_fall(robot, plan):
    cfg = SimConfig(duration=0.5, thrust_enabled=False, contact_enabled=False)
    traj = simulate(cfg, plan, robot, None)
    z0 = traj.states[0, 2]
    assert np.allclose(traj.states[:, 2], z0 - 4.905 * traj.t**2, atol=1e-9)
    assert np.allclose(traj.states[:, 21:24], 0.0)


def test_initial_state_in_static_support(plan, robot, ground):
    x = initial_state(plan, robot, ground)
    assert np.allclose(x[18:24], 0.0)
    grf, contact = contact_forces(x, robot, ground)
    assert np.all(contact)
    assert grf[:, 2].sum() == pytest.approx(0.7 * robot.weight, rel=1e-6)


def test_simulation_is_deterministic(plan, robot, ground):
    cfg = SimConfig(duration=0.2)
    a = simulate(cfg, plan, robot, ground)
    b = simulate(cfg, plan, robot, ground)
    for name in ("t", "states", "controls", "grf", "contact", "thrust"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_abort_returns_partial_trajectory(plan, robot, ground):
    # commanding a pitch past the gimbal-lock guard on a free-floating body
    cfg = SimConfig(reference=EulerAngles(pitch=1.5), contact_enabled=False)
    traj = simulate(cfg, plan, robot, ground)
    assert traj.aborted and traj.status == "NearSingular"
    assert 1 < len(traj) < 3501
    assert np.all(np.isfinite(traj.states))


def test_walk_behaviour(walk, robot):
    s = walk.states
    assert s[-1, 0] - s[0, 0] == pytest.approx(0.3, abs=0.06)
    assert np.max(np.abs(s[:, 4:6])) < 0.2
    assert np.max(np.linalg.norm(s[:, 21:24], axis=1)) < 2.0
    assert np.max(walk.thrust.sum(axis=1)) <= 78.45
    assert max(d for *_, d in stance_slip(walk, robot)) < 5e-3


def test_dynamics_rhs_is_the_marched_model(robot, ground, walk):
    # one logged step reproduces the next logged state
    k = 1234
    x, u = walk.states[k], walk.controls[k]
    x1 = rk4_step(lambda xx, uu: dynamics_rhs(xx, uu, robot, ground), x, u, 1e-3)
    assert np.array_equal(x1, walk.states[k + 1])


def test_wrench_round_trip():
    w = Wrench.from_array(np.arange(6.0))
    assert np.array_equal(w.as_array(), np.arange(6.0))
