"""Exception types shared across the package."""


class NeurotrajError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NeurotrajError):
    """Invalid configuration values."""


class ContractError(NeurotrajError):
    """A caller violated an operation's preconditions."""


class InsufficientDataError(NeurotrajError):
    """Not enough trajectory points to build the requested dataset."""


class DegenerateTimestepError(NeurotrajError):
    """Zero time difference between consecutive samples."""


class DegenerateBandwidthError(NeurotrajError):
    """Zero-variance dimension makes the KDE bandwidth collapse."""


class UndefinedCorrelationError(NeurotrajError):
    """Rank correlation is undefined for a constant series."""


class MalformedRecordsError(NeurotrajError):
    """Persisted experiment records are missing or inconsistent."""
