"""Exception taxonomy. Exit-code policy lives in the CLI: usage errors map to 2,
numerical-quality failures to 1."""


class BiflabError(Exception):
    """Base class for all package errors."""


class DegenerateParameter(BiflabError):
    """Specialization produced numerator/denominator with a common root."""


class CriticalHit(BiflabError):
    """A marked orbit point lies within tolerance of a critical point."""


class RootFindingFailure(BiflabError):
    """Simultaneous polynomial root iteration failed to converge."""


class UnusableGrid(BiflabError):
    """Clipped (negative) mass fraction beyond the declared quality gate."""

    def __init__(self, message, grid=None):
        super().__init__(message)
        self.grid = grid


class EmptyMeasure(BiflabError):
    """Sampling requested from a measure with zero total mass."""


class ZeroBallMass(BiflabError):
    """A dyadic ball carries no mass (point outside the support)."""


class ResolutionExceeded(BiflabError):
    """Requested scale is below what the grid can resolve."""


class InsufficientSamples(BiflabError):
    """Too few valid per-sample estimates to aggregate."""


class BoundaryZero(BiflabError):
    """Contour winding failed to stabilize to an integer (zero near boundary)."""


class StaleInput(BiflabError):
    """A stage input file does not match the recorded provenance digest."""


class ConfigError(BiflabError):
    """Malformed or out-of-range experiment configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


#: errors that signal misuse rather than numerical-quality problems
USAGE_ERRORS = (ConfigError, StaleInput)
