"""Exception hierarchy shared by the simulator modules."""


class DnlsqError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DnlsqError, ValueError):
    pass


class SolverError(DnlsqError):
    """Raised when a stationary profile cannot be produced."""


class UnsupportedOmega(SolverError, ValueError):
    pass


class NoConvergence(SolverError):
    pass


class WrongBranch(SolverError):
    pass


class EdgeLeak(SolverError):
    pass


class ContinuationError(SolverError):
    """A continuation step failed.

    Carries the frequency at which it failed and the profiles that did
    converge before it.
    """

    def __init__(self, omega, profiles, cause):
        self.omega = omega
        self.profiles = list(profiles)
        self.cause = cause
        super().__init__(f"continuation failed at omega={omega:.6g}: {cause}")


class NumericalBlowup(DnlsqError, ArithmeticError):
    pass


class InvalidPair(DnlsqError, ValueError):
    pass


class ZeroScale(DnlsqError, ValueError):
    pass


class NonFinite(DnlsqError, ValueError):
    pass


class UnphysicalCovariance(DnlsqError, ValueError):
    pass


class DegenerateDenominator(DnlsqError, ZeroDivisionError):
    pass


class IndexOutOfRange(DnlsqError, IndexError):
    pass


class TruncationOverflow(DnlsqError):
    pass
