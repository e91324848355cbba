"""Exception types shared across the package."""


class AlphapatchError(Exception):
    """Base class for package-specific failures."""


class ConfigError(AlphapatchError, ValueError):
    """Invalid configuration value or file."""


class GeometryError(AlphapatchError):
    """Degenerate or self-intersecting contour geometry.

    ``time`` is the simulation time at which the geometry failed, when the
    error arises during a run (``None`` otherwise).
    """

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class BlowUpError(AlphapatchError):
    """Non-finite positions produced by a time step."""

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial
