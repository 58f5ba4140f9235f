"""Exception hierarchy for the HROM toolkit."""


class HROMError(Exception):
    """Base class for all toolkit errors."""


class NearSingular(HROMError):
    """Euler-rate map is too close to gimbal lock to invert."""


class Unreachable(HROMError):
    """Foot target lies outside the leg-length limits."""


class Degenerate(HROMError):
    """Foot target coincides with the hip."""


class BoundsViolation(HROMError):
    """Thruster force outside its admissible interval."""


class OutOfRange(HROMError):
    """Evaluation parameter outside its valid interval."""


class DegenerateInterval(HROMError):
    """Interpolation interval with non-positive length."""


class Infeasible(HROMError):
    """Gait requires foot targets outside the reachable set."""


class NonFinite(HROMError):
    """A NaN or inf appeared in a state or iterate."""


class TooShort(HROMError):
    """Trajectory does not cover the requested horizon."""


class ConfigError(HROMError):
    """Malformed or inconsistent configuration."""


class SolverError(HROMError):
    """Base for solver failures; carries the best iterate found."""

    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


class MaxIter(SolverError):
    pass


class LineSearchFail(SolverError):
    pass


class SolverNonFinite(SolverError, NonFinite):
    pass
