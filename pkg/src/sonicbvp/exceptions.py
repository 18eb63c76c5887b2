"""Exception hierarchy shared by all modules."""


class SonicBVPError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SonicBVPError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ConfigError(SonicBVPError, ValueError):
    """Invalid solver or grid configuration."""


class SubsonicityError(DomainError):
    """A doping profile touches or crosses the sonic value 1."""


class FluxDegeneracyError(SonicBVPError):
    """A state left the admissible set n > j of the regularized flux."""


class ConvergenceError(SonicBVPError):
    """Newton iteration failed; carries the last iterate."""

    def __init__(self, message, *, j=None, residual_norm=None, last_iterate=None):
        super().__init__(message)
        self.j = j
        self.residual_norm = residual_norm
        self.last_iterate = last_iterate


class InvariantError(SonicBVPError):
    """A converged solution violates a post-condition."""


class DegenerateStateError(SonicBVPError):
    """A ratio field was requested at an interior node where n == 1."""


class InsufficientDataError(SonicBVPError, ValueError):
    """Too few grid nodes inside a fit window."""


class IncomparableGridsError(SonicBVPError, ValueError):
    """Two solutions live on different grids."""


class InconsistencyError(SonicBVPError):
    """Computed fields contradict a structural identity of the model."""
