"""Physical parameter sets: robot body, thrusters and the compliant ground.

Mass, inertia and geometry defaults are placeholders sized to a 1.5 ft wide
robot; the ground and friction defaults are the values used for the narrow
path walking runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEGS = ("FR", "HR", "FL", "HL")
LEG_INDEX = {name: i for i, name in enumerate(LEGS)}

G0 = 9.81
KGF = 9.80665
TOTAL_THRUST_BUDGET = 8.0 * KGF  # 78.45 N


def _vec(v, n=3):
    a = np.asarray(v, dtype=float).reshape(n)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RobotParams:
    mass: float = 10.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.1, 0.25, 0.3]))
    hip_offsets: np.ndarray = field(
        default_factory=lambda: np.array(
            [[0.15, -0.12, 0.0], [-0.15, -0.12, 0.0], [0.15, 0.12, 0.0], [-0.15, 0.12, 0.0]]
        )
    )
    thruster_positions: np.ndarray = field(
        default_factory=lambda: np.array(
            [[0.2, -0.15, 0.0], [-0.2, -0.15, 0.0], [0.2, 0.15, 0.0], [-0.2, 0.15, 0.0]]
        )
    )
    thruster_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -G0]))
    max_thrust_per_edf: float = TOTAL_THRUST_BUDGET / 4.0
    leg_length_limits: tuple = (0.05, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.array(self.inertia, dtype=float).reshape(3, 3))
        object.__setattr__(self, "hip_offsets", np.array(self.hip_offsets, dtype=float).reshape(4, 3))
        object.__setattr__(
            self, "thruster_positions", np.array(self.thruster_positions, dtype=float).reshape(4, 3)
        )
        object.__setattr__(self, "thruster_axis", _vec(self.thruster_axis))
        object.__setattr__(self, "gravity", _vec(self.gravity))
        object.__setattr__(self, "leg_length_limits", tuple(float(v) for v in self.leg_length_limits))
        for name in ("inertia", "hip_offsets", "thruster_positions"):
            getattr(self, name).setflags(write=False)
        self.validate()

    def validate(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        I = self.inertia
        if not np.allclose(I, I.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.linalg.eigvalsh(I).min() <= 0:
            raise ValueError("inertia must be positive definite")
        if abs(np.linalg.norm(self.thruster_axis) - 1.0) > 1e-9:
            raise ValueError("thruster_axis must be a unit vector")
        # FR<->FL and HR<->HL mirror about the body x-z plane
        mirror = np.array([1.0, -1.0, 1.0])
        h = self.hip_offsets
        if not (np.allclose(h[0] * mirror, h[2]) and np.allclose(h[1] * mirror, h[3])):
            raise ValueError("hip offsets must be left/right mirror-symmetric")
        lo, hi = self.leg_length_limits
        if not 0 < lo < hi:
            raise ValueError(f"bad leg length limits {self.leg_length_limits}")
        if not self.max_thrust_per_edf > 0:
            raise ValueError("max_thrust_per_edf must be positive")

    @property
    def weight(self) -> float:
        return -self.mass * float(self.gravity[2])

    @property
    def thrust_budget(self) -> float:
        return 4.0 * self.max_thrust_per_edf


@dataclass(frozen=True)
class GroundParams:
    k_gz: float = 8000.0
    k_dz: float = 250.0
    mu_c: float = 0.5
    mu_s: float = 0.6
    mu_v: float = 0.8  # N*s/m
    v_s: float = 0.01
    path_half_width: float = np.inf
    ground_height: float = 0.0

    def __post_init__(self):
        if not (self.k_gz > 0 and self.k_dz > 0):
            raise ValueError("ground stiffness and damping must be positive")
        if not self.v_s > 0:
            raise ValueError("Stribeck velocity must be positive")
        if not self.mu_s >= self.mu_c >= 0:
            raise ValueError("friction coefficients must satisfy mu_s >= mu_c >= 0")
        if self.mu_v < 0:
            raise ValueError("viscous coefficient must be non-negative")
        if not self.path_half_width > 0:
            raise ValueError("path_half_width must be positive")
