"""Direct-collocation transcription: interpolants, decision layout and defects.

The state on each interval is the cubic Hermite polynomial matching the node
values and node slopes f(x, u, t); controls are piecewise linear. The only
dynamic constraint left is the collocation defect at each interval midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInterval, OutOfRange


@dataclass
class DecisionVector:
    states: np.ndarray  # (n, nx)
    controls: np.ndarray  # (n, nu)
    final_time: float

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
        self.final_time = float(self.final_time)
        n = self.states.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 grid nodes, got {n}")
        if self.controls.shape[0] != n:
            raise ValueError("states and controls must share the grid")
        if not self.final_time > 0:
            raise ValueError("final time must be positive")

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def nx(self):
        return self.states.shape[1]

    @property
    def nu(self):
        return self.controls.shape[1]

    @property
    def times(self):
        return np.linspace(0.0, self.final_time, self.n)

    def flatten(self):
        return np.concatenate([self.states.ravel(), self.controls.ravel(), [self.final_time]])

    @classmethod
    def unflatten(cls, y, n, nx, nu):
        y = np.asarray(y, dtype=float)
        if y.shape != (n * (nx + nu) + 1,):
            raise ValueError(f"decision vector has length {y.size}, expected {n * (nx + nu) + 1}")
        X = y[: n * nx].reshape(n, nx)
        U = y[n * nx : n * (nx + nu)].reshape(n, nu)
        return cls(X.copy(), U.copy(), y[-1])

    def copy(self):
        return DecisionVector(self.states.copy(), self.controls.copy(), self.final_time)


def control_interp(u_i, u_next, t_i, t_next, t):
    """Linear control between two nodes."""
    if not t_i <= t <= t_next:
        raise OutOfRange(f"t={t} outside [{t_i}, {t_next}]")
    u_i, u_next = np.asarray(u_i, float), np.asarray(u_next, float)
    return u_i + (t - t_i) / (t_next - t_i) * (u_next - u_i)


def hermite_coefficients(x_j, x_next, f_j, f_next, h):
    """c0..c3 of x(t) = sum c_k tau^k, tau = (t - t_j)/h."""
    x_j, x_next = np.asarray(x_j, float), np.asarray(x_next, float)
    f_j, f_next = np.asarray(f_j, float), np.asarray(f_next, float)
    c0 = x_j
    c1 = h * f_j
    c2 = -3.0 * x_j - 2.0 * h * f_j + 3.0 * x_next - h * f_next
    c3 = 2.0 * x_j + h * f_j - 2.0 * x_next + h * f_next
    return c0, c1, c2, c3


def state_interp(x_j, x_next, f_j, f_next, t_j, t_next, t):
    """Cubic Hermite state and its time derivative at ``t``."""
    h = t_next - t_j
    if not h > 0:
        raise DegenerateInterval(f"interval length {h} must be positive")
    if not t_j <= t <= t_next:
        raise OutOfRange(f"t={t} outside [{t_j}, {t_next}]")
    c0, c1, c2, c3 = hermite_coefficients(x_j, x_next, f_j, f_next, h)
    tau = (t - t_j) / h
    x = c0 + tau * (c1 + tau * (c2 + tau * c3))
    xdot = (c1 + tau * (2.0 * c2 + 3.0 * tau * c3)) / h
    return x, xdot


def midpoint_state(x_j, x_next, f_j, f_next, h):
    """Closed-form Hermite value and slope at the interval midpoint."""
    x_mid = 0.5 * (x_j + x_next) + h * (f_j - f_next) / 8.0
    xdot_mid = -1.5 * (x_j - x_next) / h - 0.25 * (f_j + f_next)
    return x_mid, xdot_mid


def defects(decision: DecisionVector, dynamics):
    """Midpoint collocation residuals, shape (n - 1, nx).

    ``dynamics(x, u, t)`` returns the state derivative.
    """
    X, U = decision.states, decision.controls
    t = decision.times
    h = t[1] - t[0]
    F = np.array([dynamics(X[k], U[k], t[k]) for k in range(decision.n)])
    out = np.empty((decision.n - 1, decision.nx))
    for j in range(decision.n - 1):
        x_mid, xdot_mid = midpoint_state(X[j], X[j + 1], F[j], F[j + 1], h)
        u_mid = 0.5 * (U[j] + U[j + 1])
        out[j] = xdot_mid - dynamics(x_mid, u_mid, t[j] + 0.5 * h)
    return out
