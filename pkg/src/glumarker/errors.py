"""Exception hierarchy shared across the pipeline."""


class GluMarkerError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(GluMarkerError, ValueError):
    """An input value violates a documented precondition."""


class ConfigError(ValidationError):
    """A configuration file or override is invalid."""


class DataError(GluMarkerError, ValueError):
    """Input data is malformed or inconsistent."""


class TrainingError(GluMarkerError, RuntimeError):
    """Model fitting diverged or could not proceed."""
