"""Exception hierarchy shared across the package."""


class TreeFanovaError(Exception):
    """Base class for all package errors."""


class ConfigError(TreeFanovaError, ValueError):
    """Invalid user configuration (missing column, bad fractions, ...)."""


class IngestionError(TreeFanovaError, ValueError):
    """A data file could not be parsed."""


class ModelFormatError(TreeFanovaError, ValueError):
    """A serialized model or tree dump failed validation."""


class TrainingError(TreeFanovaError, RuntimeError):
    """Boosting could not be run on the given data."""


class UnsupportedArityError(TreeFanovaError, ValueError):
    """An effect involves more features than the decomposition supports."""
