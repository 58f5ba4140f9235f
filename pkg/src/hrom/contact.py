"""Compliant ground with Stribeck friction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import GroundParams


@dataclass(frozen=True)
class GroundForce:
    force: np.ndarray
    in_contact: bool


def stribeck_coefficient(speed, params: GroundParams):
    """Blend from mu_s at rest to mu_c at speeds well above v_s."""
    return params.mu_c - (params.mu_c - params.mu_s) * math.exp(-(speed * speed) / (params.v_s**2))


@dataclass(frozen=True)
class ContactSmoothing:
    """Regularization for derivative-based optimizers; never used by the simulator.

    sgn(v) becomes tanh(v / eps_v). Contact onset, the spring, the damper and
    the no-adhesion clamp are blended with softplus and sigmoid ramps of width
    ``eps_z`` so every force is smooth in the state. Far from the surface and
    at speeds well above eps_v the exact model is recovered.
    """

    eps_v: float = 0.01
    eps_z: float = 1e-3

    def __post_init__(self):
        if not (self.eps_v > 0 and self.eps_z > 0):
            raise ValueError("smoothing widths must be positive")


def _sgn(v):
    return (v > 0.0) - (v < 0.0)


def _softplus(x):
    return x + math.log1p(math.exp(-x)) if x > 0.0 else math.log1p(math.exp(x))


def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _smooth_components(pen, y, vx, vy, vz, params, smoothing):
    if abs(y) > params.path_half_width:
        return 0.0, 0.0, 0.0, False
    ez = smoothing.eps_z
    depth = -pen / ez
    weight = _sigmoid(depth)
    scale = params.k_gz * ez
    raw = scale * _softplus(depth) - weight * params.k_dz * vz
    fz = scale * _softplus(raw / scale)
    sx, sy = math.tanh(vx / smoothing.eps_v), math.tanh(vy / smoothing.eps_v)
    fx = -stribeck_coefficient(abs(vx), params) * fz * sx - weight * params.mu_v * vx
    fy = -stribeck_coefficient(abs(vy), params) * fz * sy - weight * params.mu_v * vy
    return fx, fy, fz, pen <= 0.0


def ground_force_components(foot_pos, foot_vel, params: GroundParams, smoothing=None):
    """Return (fx, fy, fz, in_contact) as plain floats; the hot path of the simulator."""
    x, y, z = (float(c) for c in foot_pos)
    vx, vy, vz = (float(c) for c in foot_vel)
    pen = z - params.ground_height
    if smoothing is not None:
        return _smooth_components(pen, y, vx, vy, vz, params, smoothing)
    if pen > 0.0 or abs(y) > params.path_half_width:
        return 0.0, 0.0, 0.0, False
    # no adhesion: a foot leaving the ground quickly cannot be pulled back
    fz = max(0.0, -params.k_gz * pen - params.k_dz * vz)
    fx = -stribeck_coefficient(abs(vx), params) * fz * _sgn(vx) - params.mu_v * vx
    fy = -stribeck_coefficient(abs(vy), params) * fz * _sgn(vy) - params.mu_v * vy
    return fx, fy, fz, True


def ground_reaction(foot_pos, foot_vel, params: GroundParams) -> GroundForce:
    """GRF on one foot from its world position and velocity."""
    fx, fy, fz, contact = ground_force_components(foot_pos, foot_vel, params)
    return GroundForce(np.array([fx, fy, fz]), contact)
