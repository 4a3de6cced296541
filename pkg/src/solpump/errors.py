"""Exception types shared across the package.

Everything raised on purpose derives from SolpumpError so callers can
distinguish our failures from genuine bugs. ConfigError means the inputs
were bad before any numerics ran; the rest are numerical conditions.
"""


class SolpumpError(Exception):
    """Base class for all deliberate failures."""


class ConfigError(SolpumpError):
    """Invalid parameter, config key, or precondition on inputs."""


class TruncationError(SolpumpError):
    """A field does not fit in the box to the required accuracy."""


class GridMismatchError(SolpumpError):
    """Two fields (or a field and a lattice) live on incompatible grids."""


class SeamError(SolpumpError):
    """Significant density near the periodic boundary, observable ill-defined."""


class NormDriftError(SolpumpError):
    """Particle number drifted beyond tolerance during propagation."""


class NonFiniteError(SolpumpError):
    """NaN or Inf showed up mid-computation."""


class DomainError(SolpumpError):
    """Argument outside the mathematical domain of a special function."""


class ConvergenceError(SolpumpError):
    """A truncation parameter (basis cutoff) is too small for the request."""


class IsolationError(SolpumpError):
    """Band touching detected, topological index undefined."""


class NoConvergenceError(SolpumpError):
    """Iterative solver hit its budget or stalled without converging."""


class DivergenceError(SolpumpError):
    """Iterative solver blew up."""


class BracketError(SolpumpError):
    """Could not bracket the requested root along the solution branch."""


class SpanError(SolpumpError):
    """Trajectory does not cover the requested time span."""


class SeparatrixWarning(UserWarning):
    """Elliptic modulus within 1e-6 of the separatrix, results delicate."""


class ExactnessWarning(UserWarning):
    """A decimal input was converted to an exact rational."""
