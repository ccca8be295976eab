"""Exception types shared across the package."""


class MinsurfError(Exception):
    """Base class for all package errors."""


class PointOutsideDomain(MinsurfError):
    """Evaluation point lies outside the chart domain (or too close to its
    boundary for the finite-difference stencil)."""


class DegenerateImmersion(MinsurfError):
    """The differential of the immersion dropped rank at some grid point."""


class UnknownSurface(MinsurfError):
    """Requested catalog surface name does not exist."""


class BadParams(MinsurfError):
    """Catalog surface parameters are malformed or out of range."""


class GaugeContinuationFailure(MinsurfError):
    """Normal-frame construction failed: reference projections lost rank and
    the continuation sweep could not repair the gauge."""


class LoopLeavesDomain(MinsurfError):
    """A parallel-transport loop has a vertex outside the chart domain."""


class SupportTouchesBoundary(MinsurfError):
    """A section or cutoff that must be compactly supported is nonzero on
    the boundary margin."""


class GridTooCoarse(MinsurfError):
    """Grid has too few interior cells to assemble the quadratic form."""


class NoConvergence(MinsurfError):
    """Eigenvalue iteration did not reach the requested residual.

    The best estimate so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MinimalityPreconditionViolated(UserWarning):
    """Warning: an operation that assumes minimality was run on a surface
    whose trace residual exceeds the threshold."""
