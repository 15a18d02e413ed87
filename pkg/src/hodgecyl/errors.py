"""Exception types shared across the package."""


class HodgecylError(Exception):
    """Base class for package errors."""


class DomainError(HodgecylError, ValueError):
    """Evaluation outside the valid domain (non-positive metric, bad point...)."""


class UnsupportedShapeError(HodgecylError, ValueError):
    """Input falls outside the metric/form class the operation supports."""


class ConsistencyError(HodgecylError, RuntimeError):
    """Two supposedly-equivalent assemblies of the same operator disagree."""


class SpectralGapError(HodgecylError, RuntimeError):
    """A boundary-value solve hit a (near-)singular system; run a spectral probe."""


class JetDepthError(HodgecylError, ValueError):
    """A computation needs more derivative data than the metric supplies."""


class ConfigError(HodgecylError, ValueError):
    """Invalid run configuration."""
