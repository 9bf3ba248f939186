# Utils package

from .error_handling import (
    CheckpointError,
    ConfigurationError,
    ContractError,
    DatasetCorruptionError,
    DimensionError,
    DivergenceError,
    ErrorReport,
    ParameterError,
    SDCIError,
    ShapeError,
    UnsupportedVersionError,
    handle_command_errors,
    log_operation_error,
    log_operation_start,
    log_operation_success,
)

__all__ = [
    "handle_command_errors",
    "ErrorReport",
    "SDCIError",
    "ParameterError",
    "DimensionError",
    "ShapeError",
    "ContractError",
    "ConfigurationError",
    "DatasetCorruptionError",
    "UnsupportedVersionError",
    "CheckpointError",
    "DivergenceError",
    "log_operation_start",
    "log_operation_success",
    "log_operation_error",
]
