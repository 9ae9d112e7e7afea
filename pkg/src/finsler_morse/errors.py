"""Exception and warning classes shared across the package."""

from __future__ import annotations


class FinslerError(Exception):
    """Base class for all errors raised by finsler_morse."""


class ConfigError(FinslerError, ValueError):
    """Malformed metric or run configuration."""


class ChartDomainError(FinslerError, ValueError):
    """A point lies outside the coordinate chart."""


class ChartExitError(FinslerError):
    """An integrated trajectory left the chart (entered a polar cap)."""

    def __init__(self, exit_time: float, message: str | None = None):
        self.exit_time = float(exit_time)
        super().__init__(message or f"trajectory left the chart at t={exit_time:.6g}")


class ConvexityError(FinslerError):
    """The fundamental tensor is not positive definite at (x, v)."""

    def __init__(self, x, v, min_eigenvalue: float):
        self.x = tuple(float(c) for c in x)
        self.v = tuple(float(c) for c in v)
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"fundamental tensor not positive definite at x={self.x}, v={self.v} "
            f"(min eigenvalue {self.min_eigenvalue:.3e})"
        )


class NotAGeodesicError(FinslerError):
    """Input path fails the geodesic consistency check, or a junction is broken."""


class NotClosedError(FinslerError):
    """A closed geodesic was required but the path does not close up."""


class InconsistentJacobiBasisError(FinslerError):
    """The b-form matrix is not symmetric within tolerance."""


class StepSizeError(FinslerError):
    """Finite-difference Hessian is too asymmetric to be trusted."""


class IndexCoverageError(FinslerError):
    """A census does not reach the indices a check asks about."""


class IncompleteSearchWarning(UserWarning):
    """Shooting found nothing although a geodesic must exist below the length cap."""


class AmbiguousRankWarning(UserWarning):
    """A singular value or eigenvalue sits within a factor 10 of the rank threshold."""


class ConjugatePairWarning(UserWarning):
    """Endpoints of a geodesic are conjugate along it."""
