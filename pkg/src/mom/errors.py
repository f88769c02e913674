"""Exception types raised by the solvers."""


class MomError(Exception):
    """Base class for solver errors."""


class ParameterError(MomError, ValueError):
    """Invalid argument (bad dimension, wrong node counts, negative sigma...)."""


class DegenerateTransmitters(MomError):
    """Transmitter geometry is collinear (2D) or coplanar (3D)."""


class DegenerateMeasurement(MomError):
    """Two receivers are equidistant in pseudorange from an eliminated transmitter."""


class NoRealSolution(MomError):
    """The homotopy solver returned no real root."""


class InfeasibleDistance(MomError):
    """A pseudorange minus its offset is negative beyond tolerance."""


class SolveFailed(MomError):
    """Every subset attempt of the overdetermined pipeline failed."""

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = list(attempts or [])


class ParseError(MomError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
