"""Exception types shared across the package."""


class FractureLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(FractureLabError, ValueError):
    """Invalid configuration value (bad resolution, fraction, schedule...)."""


class IngestionError(FractureLabError, ValueError):
    """A dataset directory failed validation; the message names the offending row."""


class ProvenanceError(FractureLabError, RuntimeError):
    """Training/evaluation data separation was violated."""
