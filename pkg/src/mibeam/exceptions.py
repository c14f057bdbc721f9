"""Exception types shared across the package."""


class MibeamError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MibeamError):
    """Configuration file is malformed, has unknown keys, or out-of-range values."""


class GeometryError(MibeamError):
    """Coil geometry is physically invalid (e.g. overlapping coils)."""


class IllConditionedGeometryError(MibeamError):
    """Receiver impedance matrix is numerically singular for this layout."""


class ThresholdsUnattainableError(MibeamError):
    """SINR / sum-rate thresholds cannot be met for this geometry and error level."""


class SolverFailureError(MibeamError):
    """Interior-point solver did not converge within its iteration budget."""


class Rank1ExtractionError(MibeamError):
    """No feasible rank-one beamformer found by randomization or eigen fallback."""
