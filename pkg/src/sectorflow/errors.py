"""Exception types shared across the package."""


class SectorflowError(Exception):
    """Base class for all package-specific failures."""


class PreconditionError(SectorflowError):
    """A documented precondition of an operation was violated."""


class DatumError(SectorflowError):
    """An initial datum violates one of its structural invariants."""


class LawRangeError(SectorflowError):
    """A boundary law left the admissible slope range (-tan(beta), tan(beta))."""


class ChartFoldError(SectorflowError):
    """A chart lost its monotone parametrization or its denominator floor."""


class BlowUpError(SectorflowError):
    """The time stepper produced NaN/overflow; carries a dump of the last state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConvergenceError(SectorflowError):
    """An iteration (Newton shot, orbit search, ...) failed to converge.

    The ``trace`` attribute carries the residual history that was observed.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BracketError(SectorflowError):
    """A bisection could not establish a sign-changing bracket."""
