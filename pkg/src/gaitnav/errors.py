"""Exception hierarchy shared across the package."""


class GaitNavError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGait(GaitNavError):
    """Step-to-step matrices are numerically singular (omega * period ~ 0)."""


class OutOfPhase(GaitNavError):
    """Phase argument outside the step interval [0, T]."""


class InvalidSpec(GaitNavError):
    """Terrain specification with nonpositive or inconsistent dimensions."""


class OutOfBounds(GaitNavError):
    """Query point outside the heightfield extent."""


class NoFoothold(GaitNavError):
    """No foothold polygon within the projection radius."""


class TooFewSamples(GaitNavError):
    """Envelope construction needs at least two samples."""


class DimensionMismatch(GaitNavError):
    """Error vector and weight matrix dimensions disagree."""


class EmptyTrace(GaitNavError):
    """Trace evaluation called with no samples."""


class PlanExpired(GaitNavError):
    """Interpolation time beyond the plan horizon."""


class Infeasible(GaitNavError):
    """Solver could not satisfy barrier constraints within slack tolerance."""


class ParseError(GaitNavError):
    """Malformed scenario or terrain file (bad syntax, unknown keys)."""


class ValidationError(GaitNavError):
    """Well-formed input violating a documented invariant."""
