"""Exception types shared across the package."""


class SpinbusError(Exception):
    """Base class for all package-specific errors."""


class LandscapeRangeError(SpinbusError, ValueError):
    """Position outside the sampled range of a valley landscape."""


class DegenerateValleyError(SpinbusError, ValueError):
    """Valley splitting vanishes where a nondegenerate frame is required."""


class MalformedLandscapeFileError(SpinbusError, ValueError):
    """Landscape file is truncated, unversioned, or fails schema checks."""


class SingularReconstructionError(SpinbusError, ValueError):
    """Initial-state set is not tomographically complete."""


class NumericalFailureError(SpinbusError, RuntimeError):
    """Propagation or optimization produced non-finite numbers."""


class ConfigError(SpinbusError, ValueError):
    """Invalid experiment or model configuration."""
