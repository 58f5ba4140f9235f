import numpy as np
import pytest

from hrom.dynamics import (ControlInput, ThrusterForces, Wrench, allocation_matrix, contact_forces,
                           dynamics_rhs, foot_kinematics, generalized_matrices, mechanical_energy,
                           thruster_wrench, wrench_allocation)
from hrom.errors import BoundsViolation
from hrom.kinematics import euler_to_rotation, foot_jacobian
from hrom.params import G0, GroundParams, RobotParams
from hrom.sim import rk4_step
from hrom.state import ANG, NU, NX, OMEGA, QL, QLD, VEL, FullState


def airborne_state(z=1.0):
    x = np.zeros(NX)
    x[2] = z
    x[QL] = np.tile([0.0, 0.0, 0.25], 4)
    return x


def test_hover_with_thrust_equal_to_weight(robot):
    u = np.zeros(NU)
    u[2] = robot.weight
    xdot = dynamics_rhs(airborne_state(), u, robot, None)
    assert np.allclose(xdot, 0.0, atol=1e-12)


def test_body_thrust_is_rotated_into_world(robot):
    x = airborne_state()
    x[ANG] = [0.0, 0.0, 0.3]
    u = np.zeros(NU)
    u[2] = 50.0
    xdot = dynamics_rhs(x, u, robot, None)
    expected = euler_to_rotation(x[ANG]) @ [0, 0, 50.0] / robot.mass + robot.gravity
    assert np.allclose(xdot[VEL], expected)


def test_free_fall_is_ballistic(robot):
    x = airborne_state()
    u = np.zeros(NU)

    def f(s, c):
        return dynamics_rhs(s, c, robot, None)

    for k in range(1, 501):
        x = rk4_step(f, x, u, 1e-3)
    t = 0.5
    assert abs(x[2] - (1.0 - 0.5 * G0 * t * t)) < 1e-9


def test_gyroscopic_term(robot):
    x = airborne_state()
    w = np.array([1.0, -2.0, 0.5])
    x[OMEGA] = w
    xdot = dynamics_rhs(x, np.zeros(NU), robot, None)
    I = robot.inertia
    assert np.allclose(xdot[21:24], -np.linalg.solve(I, np.cross(w, I @ w)))


def test_torque_free_tumble_conserves_energy_and_momentum_norm(robot):
    x = airborne_state()
    x[ANG] = [0.3, 0.2, np.pi / 2]
    x[OMEGA] = [3.0, 0.4, -0.6]
    e0 = mechanical_energy(x, robot)
    h0 = np.linalg.norm(robot.inertia @ x[OMEGA])

    def f(s, c):
        return dynamics_rhs(s, c, robot, None)

    for _ in range(1000):
        x = rk4_step(f, x, np.zeros(NU), 1e-3)
    assert abs(mechanical_energy(x, robot) - e0) / e0 < 1e-6
    assert abs(np.linalg.norm(robot.inertia @ x[OMEGA]) - h0) / h0 < 1e-6


def test_manipulator_form(robot):
    x = airborne_state()
    x[OMEGA] = [0.2, 0.1, -0.3]
    D, Cv, G = generalized_matrices(x, robot)
    assert np.allclose(D[:3, :3], robot.mass * np.eye(3)) and np.allclose(D[3:, 3:], robot.inertia)
    assert np.allclose(G, [0, 0, robot.weight, 0, 0, 0])
    # D vdot + Cv + G = u_t with zero contact
    u = np.zeros(NU)
    u[:6] = [1.0, -2.0, 30.0, 0.3, -0.1, 0.2]
    xdot = dynamics_rhs(x, u, robot, None)
    assert np.allclose(D @ xdot[18:24] + Cv + G, u[:6])


def test_ground_force_enters_through_foot_jacobian(robot, ground):
    # feet pressed into the ground: generalized force equals sum J^T F in (world, body) coordinates
    x = airborne_state(z=0.249)
    x[ANG] = [0.1, 0.05, -0.04]
    x[QL] = np.tile([0.0, 0.0, 0.25], 4)
    x[QL][3 * 1 + 2] = 0.2  # lift HR a little
    F, flags = contact_forces(x, robot, ground)
    D, Cv, G = generalized_matrices(x, robot)
    xdot = dynamics_rhs(x, np.zeros(NU), robot, ground)
    gen = np.zeros(6)
    for i in range(4):
        J = foot_jacobian(x[ANG], robot, x[QL][3 * i:3 * i + 3], i)
        gen += J.T @ F[i]
    # the body-frame moment block of J^T is -(R skew r)^T F = r x (R^T F)
    assert np.allclose(D @ xdot[18:24] + Cv + G, gen, atol=1e-9)
    assert any(flags)


def test_joint_accelerations_pass_through(robot):
    u = np.zeros(NU)
    u[6:] = np.arange(12.0)
    xdot = dynamics_rhs(airborne_state(), u, robot, None)
    assert np.array_equal(xdot[QLD], np.arange(12.0))


def test_foot_velocity_matches_jacobian(robot, rng):
    x = airborne_state()
    x[ANG] = rng.uniform(-0.5, 0.5, 3)
    x[VEL] = rng.normal(size=3)
    x[OMEGA] = rng.normal(size=3)
    pos, vel, _, _ = foot_kinematics(x, robot)
    for i in range(4):
        J = foot_jacobian(x[ANG], robot, x[QL][3 * i:3 * i + 3], i)
        assert np.allclose(vel[i], J @ np.concatenate([x[VEL], x[OMEGA]]))


def test_allocation_round_trip(robot):
    f = np.array([5.0, 6.0, 7.0, 8.0])
    w = thruster_wrench(f, robot)
    got = wrench_allocation(w, robot)
    assert not got.saturated
    assert np.allclose(got.forces, f)
    A = allocation_matrix(robot)
    # a planar thruster layout has no authority over Fx, Fy, Mz
    assert np.allclose(A[[0, 1, 5]], 0.0)


def test_saturated_allocation_stays_in_box(robot):
    desired = Wrench(np.array([0.0, 0.0, 200.0]), np.array([5.0, 0.0, 0.0]))
    got = wrench_allocation(desired, robot)
    assert got.saturated
    assert np.all(got.forces >= 0) and np.all(got.forces <= robot.max_thrust_per_edf + 1e-12)
    assert got.total <= robot.thrust_budget + 1e-9


def test_thruster_bounds_checked(robot):
    with pytest.raises(BoundsViolation):
        thruster_wrench([-1.0, 0, 0, 0], robot)
    with pytest.raises(BoundsViolation):
        thruster_wrench(ThrusterForces(np.full(4, 100.0)), robot)


def test_control_and_state_containers_round_trip(rng):
    u = rng.normal(size=NU)
    assert np.array_equal(ControlInput.from_array(u).as_array(), u)
    x = rng.normal(size=NX)
    assert np.array_equal(FullState.from_array(x).as_array(), x)
    with pytest.raises(ValueError):
        ControlInput.from_array(np.zeros(5))


@pytest.mark.parametrize("kw", [dict(mass=0.0), dict(inertia=np.diag([1.0, -1.0, 1.0])),
                                dict(thruster_axis=(0, 0, 2.0)), dict(leg_length_limits=(0.3, 0.1)),
                                dict(hip_offsets=np.ones((4, 3)))])
def test_robot_params_validation(kw):
    with pytest.raises(ValueError):
        RobotParams(**kw)


def test_robot_params_are_read_only(robot):
    with pytest.raises(ValueError):
        robot.inertia[0, 0] = 5.0


def test_contact_free_rhs_ignores_ground_params(robot):
    x = airborne_state(z=0.1)
    assert np.array_equal(dynamics_rhs(x, np.zeros(NU), robot, None),
                          dynamics_rhs(x, np.zeros(NU), robot, GroundParams(ground_height=-5.0)))
