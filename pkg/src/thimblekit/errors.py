"""Exception hierarchy shared by all modules."""


class ThimbleKitError(Exception):
    """Base class for all package errors."""


class ActionRangeError(ThimbleKitError, ArithmeticError):
    """Evaluation point outside the guarded band where exponentials stay finite."""


class FlowIntegrationError(ThimbleKitError):
    """Gradient-flow integration failed; ``last_point`` holds the last good point."""

    def __init__(self, message: str, last_point: complex | None = None):
        super().__init__(message)
        self.last_point = last_point


class CutoffTooSmallError(ThimbleKitError):
    """A truncated contour leaves a tail larger than the accuracy target."""


class AmbiguousIntersectionError(ThimbleKitError):
    """Two polylines meet at an angle too small to orient reliably."""


class InvalidCycleError(ThimbleKitError):
    """A cycle's ends do not lie in admissible (decaying) regions."""


class InconsistentMatrixError(ThimbleKitError):
    """An assembled Stokes matrix failed its unitriangularity check."""


class NotAvailableError(ThimbleKitError):
    """Requested closed form or table entry is not implemented for this case."""


class UnsupportedGermError(ThimbleKitError):
    """Germ or parameter set outside the implemented singularity types."""


class ContinuationError(ThimbleKitError):
    """Branch tracking or analytic continuation lost its footing."""


class QuadratureError(ThimbleKitError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message: str, estimate: complex | None = None):
        super().__init__(message)
        self.estimate = estimate
