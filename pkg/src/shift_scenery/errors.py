"""Exception types shared across the package."""


class ShiftSceneryError(Exception):
    """Base class for all package errors."""


class InvalidModelError(ShiftSceneryError, ValueError):
    """A measure model violates one of its construction invariants."""


class UnsupportedModelError(ShiftSceneryError, TypeError):
    """The operation is not defined for this kind of model (e.g. mixtures)."""


class ZeroMeasurePrefixError(ShiftSceneryError, ValueError):
    """Conditioning on a cylinder of measure zero."""


class DegenerateIndicatorError(ShiftSceneryError, ValueError):
    """The limit distribution gives the target set mass 0 or 1."""


class PeriodicChainError(ShiftSceneryError, ValueError):
    """Asymptotic-variance machinery needs an aperiodic chain."""


class ConfigError(ShiftSceneryError, ValueError):
    """Malformed experiment configuration."""
