"""Exception types shared across the package."""


class GaitcertError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(GaitcertError, ValueError):
    """A parameter violates a documented precondition."""


class TimeOutOfRangeError(GaitcertError, ValueError):
    """A query time falls outside a trajectory's horizon."""


class ConfigError(GaitcertError):
    """A run configuration is inconsistent or artifacts do not match it."""


class SplitOverlapError(GaitcertError):
    """Two dataset splits that must be disjoint share environment indices."""


class NonFiniteCostError(GaitcertError):
    """A cost evaluation produced NaN or infinity during training."""
