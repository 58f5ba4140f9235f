"""State containers and the flat 36-vector layout.

Flat layout: [p_B(3), (yaw, pitch, roll)(3), q_L(12), p_dot_B(3), omega_B(3), q_dot_L(12)]
with q_L stacked per leg as (phi, gamma, length) in FR, HR, FL, HL order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import euler_to_rotation, wrap_angle
from .params import LEGS

NX = 36
NU = 18

POS = slice(0, 3)
ANG = slice(3, 6)
QL = slice(6, 18)
VEL = slice(18, 21)
OMEGA = slice(21, 24)
QLD = slice(24, 36)

STATE_NAMES = (
    ["px", "py", "pz", "yaw", "pitch", "roll"]
    + [f"{leg}_{j}" for leg in LEGS for j in ("phi", "gamma", "l")]
    + ["vx", "vy", "vz", "wx", "wy", "wz"]
    + [f"{leg}_{j}_dot" for leg in LEGS for j in ("phi", "gamma", "l")]
)


@dataclass(frozen=True)
class EulerAngles:
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def as_array(self):
        return np.array([self.yaw, self.pitch, self.roll])

    def wrapped(self):
        return EulerAngles(wrap_angle(self.yaw), wrap_angle(self.pitch), wrap_angle(self.roll))


@dataclass(frozen=True)
class BodyPose:
    position: np.ndarray
    orientation: EulerAngles

    def rotation(self):
        return euler_to_rotation(self.orientation.as_array())


@dataclass(frozen=True)
class BodyVelocity:
    linear: np.ndarray
    angular: np.ndarray


@dataclass(frozen=True)
class LegJoints:
    """Per-leg (phi, gamma, length) and rates, rows in FR, HR, FL, HL order."""

    q: np.ndarray  # (4, 3)
    qd: np.ndarray  # (4, 3)

    def __getitem__(self, leg):
        i = LEGS.index(leg) if isinstance(leg, str) else int(leg)
        return self.q[i]

    def check_lengths(self, limits):
        lo, hi = limits
        lengths = self.q[:, 2]
        return bool(np.all((lengths >= lo) & (lengths <= hi)))


@dataclass(frozen=True)
class FullState:
    pose: BodyPose
    legs: LegJoints
    velocity: BodyVelocity

    def as_array(self):
        x = np.empty(NX)
        x[POS] = self.pose.position
        x[ANG] = self.pose.orientation.as_array()
        x[QL] = np.asarray(self.legs.q).reshape(12)
        x[VEL] = self.velocity.linear
        x[OMEGA] = self.velocity.angular
        x[QLD] = np.asarray(self.legs.qd).reshape(12)
        return x

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (NX,):
            raise ValueError(f"expected a flat state of length {NX}, got shape {x.shape}")
        return cls(
            pose=BodyPose(x[POS].copy(), EulerAngles(*x[ANG])),
            legs=LegJoints(x[QL].reshape(4, 3).copy(), x[QLD].reshape(4, 3).copy()),
            velocity=BodyVelocity(x[VEL].copy(), x[OMEGA].copy()),
        )


def as_state_array(x):
    if isinstance(x, FullState):
        return x.as_array()
    return np.asarray(x, dtype=float)
