"""Exception hierarchy shared by all wavespeed modules."""


class WaveSpeedError(Exception):
    """Base class for every error raised by this package."""


class DomainError(WaveSpeedError, ValueError):
    """A parameter lies outside the domain where an expression is defined."""


class SingularityError(WaveSpeedError):
    """The planar field was evaluated too close to its pole at U = c."""

    def __init__(self, message, xi=None, state=None):
        super().__init__(message)
        self.xi = xi
        self.state = state


class StepSizeUnderflow(WaveSpeedError):
    """The adaptive integrator could not make progress (likely blow-up)."""

    def __init__(self, message, xi=None, state=None):
        super().__init__(message)
        self.xi = xi
        self.state = state


class BlowUpError(WaveSpeedError):
    """A trajectory or PDE field exceeded its magnitude guard."""

    def __init__(self, message, where=None, state=None):
        super().__init__(message)
        self.where = where
        self.state = state


class NumericalFailure(WaveSpeedError):
    """A root solve or eigendecomposition failed its residual check."""


class CflError(WaveSpeedError):
    """The explicit PDE time step violated its stability limit."""


class BracketError(WaveSpeedError):
    """Minimal-speed bracketing could not find an admissible upper speed."""


class PreconditionError(WaveSpeedError):
    """An operation was called on input that does not meet its precondition."""
