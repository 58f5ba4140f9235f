import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hrom.contact import ContactSmoothing, ground_force_components, ground_reaction, stribeck_coefficient
from hrom.params import GroundParams

speed = st.floats(-2.0, 2.0)
depth = st.floats(-0.02, 0.0)


def test_one_millimetre_penetration_gives_eight_newtons(ground):
    f = ground_reaction((0.0, 0.0, -0.001), (0.0, 0.0, 0.0), ground)
    assert abs(f.force[2] - 8.0) <= 1e-12
    assert f.in_contact
    assert f.force[0] == 0.0 and f.force[1] == 0.0


def test_airborne_foot_has_exactly_zero_force(ground):
    f = ground_reaction((0.1, 0.0, 0.01), (0.3, 0.1, -1.0), ground)
    assert not f.in_contact
    assert np.array_equal(f.force, np.zeros(3))


def test_zero_slip_velocity_gives_zero_tangential_force(ground):
    fx, fy, fz, _ = ground_force_components((0, 0, -0.002), (0.0, 0.0, -0.01), ground)
    assert fx == 0.0 and fy == 0.0 and fz > 0


def test_stribeck_limits(ground):
    assert math.isclose(stribeck_coefficient(0.0, ground), ground.mu_s)
    assert math.isclose(stribeck_coefficient(1.0, ground), ground.mu_c, abs_tol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_stribeck_monotone_decreasing(a, b):
    g = GroundParams()
    lo, hi = sorted((a, b))
    assert stribeck_coefficient(hi, g) <= stribeck_coefficient(lo, g) + 1e-15


@given(depth, speed, speed, speed)
def test_y_friction_mirrors_x(z, vx, vy, vz):
    g = GroundParams()
    fx, fy, _, _ = ground_force_components((0, 0, z), (vx, vy, vz), g)
    gx, gy, _, _ = ground_force_components((0, 0, z), (vy, vx, vz), g)
    assert fx == gy and fy == gx


@given(depth, speed, speed, speed)
def test_tangential_force_bounded_without_viscosity(z, vx, vy, vz):
    g = GroundParams(mu_v=0.0)
    fx, fy, fz, _ = ground_force_components((0, 0, z), (vx, vy, vz), g)
    assert fz >= 0.0
    assert abs(fx) <= g.mu_s * fz + 1e-12 and abs(fy) <= g.mu_s * fz + 1e-12


def test_normal_force_continuous_at_surface(ground):
    above = ground_force_components((0, 0, 1e-12), (0, 0, 0), ground)[2]
    below = ground_force_components((0, 0, -1e-12), (0, 0, 0), ground)[2]
    assert above == 0.0 and below < 1e-7


def test_rising_foot_is_not_pulled_back(ground):
    fx, fy, fz, contact = ground_force_components((0, 0, -0.001), (0.2, 0.0, 1.0), ground)
    assert contact and fz == 0.0
    assert math.isclose(fx, -ground.mu_v * 0.2)


def test_narrow_path_edge():
    g = GroundParams(path_half_width=0.1)
    assert ground_force_components((0, 0.11, -0.001), (0, 0, 0), g) == (0.0, 0.0, 0.0, False)
    assert ground_force_components((0, 0.09, -0.001), (0, 0, 0), g)[2] > 0


@pytest.mark.parametrize("kw", [dict(k_gz=0.0), dict(k_dz=-1.0), dict(v_s=0.0), dict(mu_c=0.7),
                                dict(mu_v=-0.1), dict(path_half_width=0.0)])
def test_ground_params_validation(kw):
    with pytest.raises(ValueError):
        GroundParams(**kw)


def test_smoothed_model_matches_exact_away_from_kinks(ground):
    sm = ContactSmoothing(eps_v=0.01, eps_z=1e-3)
    pos, vel = (0, 0, -0.02), (0.5, -0.4, -0.05)
    exact = np.array(ground_force_components(pos, vel, ground)[:3])
    smooth = np.array(ground_force_components(pos, vel, ground, sm)[:3])
    assert np.allclose(smooth, exact, rtol=1e-6)


@given(st.floats(-0.005, 0.005), speed, speed)
def test_smoothed_model_is_continuous(z, vx, vz):
    g, sm = GroundParams(), ContactSmoothing()
    h = 1e-9
    a = np.array(ground_force_components((0, 0, z - h), (vx, 0, vz), g, sm)[:3])
    b = np.array(ground_force_components((0, 0, z + h), (vx, 0, vz), g, sm)[:3])
    assert np.all(np.abs(a - b) < 1e-3)
    assert a[2] >= 0


def test_smoothing_widths_must_be_positive():
    with pytest.raises(ValueError):
        ContactSmoothing(eps_v=0.0)
