"""Exception types raised by cpband."""


class CPBandError(Exception):
    """Base class for all cpband errors."""


class DegenerateQuery(CPBandError):
    """The closest point is not unique (e.g. the centre of a sphere)."""


class NotOnBoundary(CPBandError):
    """A boundary-only quantity was requested away from the boundary."""


class OutOfDomain(CPBandError):
    """Surface parameters outside the parameter domain."""


class StencilEscape(CPBandError):
    """An interpolation or difference stencil left the computational band."""


class SingularSystem(CPBandError):
    """The linear system could not be solved (rank deficient)."""


class NoConvergence(CPBandError):
    """An iterative procedure hit its iteration cap.

    ``history`` carries the residual history and ``last`` the final iterate
    when available.
    """

    def __init__(self, message, history=None, last=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)
        self.last = last


class NoBoundary(CPBandError):
    """The surface is closed, so boundary operators vanish."""


class FactorizationFailure(CPBandError):
    """Sparse LU factorization failed."""


class NonFinite(CPBandError):
    """A time-stepped state became NaN or infinite."""


class ConfigError(CPBandError):
    """Invalid run configuration."""
