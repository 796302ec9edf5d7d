"""Fwdlearn Exceptions

Custom exception classes for the fwdlearn library.

Every exception carries the process exit code the command line interface
reports when it escapes a subcommand:

    - 2  configuration errors
    - 3  data errors (datasets, checkpoints, reports)
    - 4  training and environment faults

License: MIT
"""

__all__ = [
    "FwdlearnError",
    "ConfigError",
    "DataError",
    "EmptyDatasetError",
    "InputDomainError",
    "ShapeError",
    "ReportError",
    "TrainingFault",
    "EnvironmentFault",
    "ContractViolation",
]


class FwdlearnError(Exception):
    """Base exception for all fwdlearn errors."""

    exit_code: int = 1


class ConfigError(FwdlearnError):
    """Raised when a configuration is invalid (unknown key, bad value, unknown name)."""

    exit_code = 2


class DataError(FwdlearnError):
    """Raised when a dataset, checkpoint or table cannot be used."""

    exit_code = 3


class EmptyDatasetError(DataError):
    """Raised when no episode is left to train or evaluate on."""


class InputDomainError(DataError, ValueError):
    """Raised when a stepper receives non-finite input."""


class ShapeError(DataError, ValueError):
    """Raised when array dimensions do not match."""


class ReportError(DataError):
    """Raised when a metrics or rollout table is malformed."""


class TrainingFault(FwdlearnError):
    """Raised when a loss becomes non-finite during training."""

    exit_code = 4


class EnvironmentFault(FwdlearnError):
    """Raised when the forward-model environment receives an unusable action."""

    exit_code = 4


class ContractViolation(FwdlearnError):
    """Raised when an object is used outside its contract (e.g. stepping after terminal)."""

    exit_code = 4
