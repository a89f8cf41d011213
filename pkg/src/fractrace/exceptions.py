"""Exception types shared across the package."""


class FractraceError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(FractraceError):
    """A geometric precondition failed (containment, coverage gap, ...)."""


class ResourceError(FractraceError):
    """A construction would exceed its memory or recursion budget."""


class ResolutionError(FractraceError):
    """A requested scale is below the resolvable resolution of the data."""


class PorosityError(FractraceError):
    """No usable porosity constant was found at this resolution."""


class DimensionError(FractraceError):
    """Similarity dimension outside the supported open range (n-1, n)."""


class OpenSetConditionError(FractraceError):
    """First-generation map images overlap: open set condition violated."""


class EmptySupportError(FractraceError):
    """The measure restricted to the cube has empty support."""


class ConvergenceError(FractraceError):
    """An iterative solve did not converge within its iteration budget."""

    def __init__(self, message, best_value=None):
        super().__init__(message)
        self.best_value = best_value


class DegenerateGeometryError(FractraceError):
    """Point set does not span the polynomial space (rank deficiency)."""


class InconsistencyError(FractraceError):
    """Computed quantities violate a structural identity they must satisfy."""


class ParameterError(FractraceError):
    """Invalid or inconsistent parameter combination."""


class ConfigError(FractraceError):
    """Invalid experiment configuration."""
