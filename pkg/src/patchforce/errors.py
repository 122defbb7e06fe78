"""Exception hierarchy.

Domain problems (bad arguments) subclass ``ValueError`` so callers that only
care about "invalid input" can catch that; numerical failures subclass
``RuntimeError``.
"""


class PatchForceError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PatchForceError, ValueError):
    pass


class ConvergenceError(PatchForceError, RuntimeError):
    pass


class ResolutionError(DomainError):
    """Surface grid too coarse for the requested spectrum."""


class GeometryError(DomainError):
    """Integration disk does not fit on the surface grid."""


class InfeasibleFitError(PatchForceError, RuntimeError):
    """Fit produced V_rms^2 < 0; the offending fit is attached as ``.fit``."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class BracketError(PatchForceError, RuntimeError):
    """No interior minimum found; ``.scan`` holds the (x, f) diagnostic grid."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan
