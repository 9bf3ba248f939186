"""
Error types and handling utilities shared by every subsystem.
"""

import functools
import logging
import sys
from typing import Any, Callable, Dict, Optional

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class ErrorReport(BaseModel):
    """Structured error payload printed by the CLI."""

    error: str
    message: str
    operation: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


class SDCIError(Exception):
    """Base exception for all library errors."""

    def __init__(self, message: str, operation: Optional[str] = None, **details: Any):
        self.message = message
        self.operation = operation
        self.details = details
        super().__init__(message)

    def to_report(self) -> ErrorReport:
        return ErrorReport(
            error=type(self).__name__,
            message=self.message,
            operation=self.operation,
            details=self.details or None,
        )


class ParameterError(SDCIError, ValueError):
    """Raised for out-of-range scalar parameters (temperatures, probabilities, counts)."""


class DimensionError(SDCIError, ValueError):
    """Raised when two operands disagree in shape."""


class ShapeError(SDCIError, ValueError):
    """Raised when a single tensor has an unusable shape."""


class ContractError(SDCIError):
    """Raised when an operation is called outside its pre-conditions."""


class ConfigurationError(SDCIError, ValueError):
    """Raised for invalid or inconsistent experiment configuration."""


class DatasetCorruptionError(SDCIError):
    """Raised when a dataset file is truncated or inconsistent with its manifest."""

    def __init__(self, message: str, tensor: Optional[str] = None, **details: Any):
        self.tensor = tensor
        super().__init__(message, operation="read dataset", tensor=tensor, **details)


class UnsupportedVersionError(SDCIError):
    """Raised when a file was written by a newer major format version."""


class CheckpointError(SDCIError):
    """Raised when a checkpoint is missing a tensor or does not match its config."""

    def __init__(self, message: str, tensor: Optional[str] = None, **details: Any):
        self.tensor = tensor
        super().__init__(message, operation="load checkpoint", tensor=tensor, **details)


class DivergenceError(SDCIError):
    """Raised when training produces a non-finite loss."""

    def __init__(self, message: str, epoch: int, last_good_checkpoint: Optional[str] = None):
        self.epoch = epoch
        self.last_good_checkpoint = last_good_checkpoint
        super().__init__(
            message, operation="fit", epoch=epoch, last_good_checkpoint=last_good_checkpoint
        )


def handle_command_errors(operation_name: str, usage: Optional[Callable[[], str]] = None):
    """
    Decorator for consistent error handling across CLI subcommands.

    The wrapped function returns nothing on success; the wrapper turns its outcome
    into a process exit code.

    Args:
        operation_name: Description of the operation for logging/error messages
        usage: Optional callable returning usage text printed on configuration errors
    """

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                func(*args, **kwargs)
                return EXIT_OK

            except (ConfigurationError, PydanticValidationError) as e:
                logger.error(f"Invalid configuration in {operation_name}: {e}")
                report = ErrorReport(error="Configuration error", message=str(e), operation=operation_name)
                print(report.model_dump_json(exclude_none=True), file=sys.stderr)
                if usage is not None:
                    print(usage(), file=sys.stderr)
                return EXIT_USAGE

            except SDCIError as e:
                logger.error(f"Error in {operation_name}: {e.message}", exc_info=True)
                report = e.to_report()
                if report.operation is None:
                    report.operation = operation_name
                print(report.model_dump_json(exclude_none=True), file=sys.stderr)
                return EXIT_FAILURE

            except Exception as e:
                logger.error(f"Unexpected error in {operation_name}: {e}", exc_info=True)
                report = ErrorReport(
                    error="Internal error",
                    message=f"Failed to {operation_name.lower()}: {e}",
                    operation=operation_name,
                )
                print(report.model_dump_json(exclude_none=True), file=sys.stderr)
                return EXIT_FAILURE

        return wrapper

    return decorator


def log_operation_start(operation: str, **context) -> None:
    """Log the start of an operation with context."""
    logger.info(f"Starting {operation}", extra=context)


def log_operation_success(operation: str, **context) -> None:
    """Log successful completion of an operation."""
    logger.info(f"Successfully completed {operation}", extra=context)


def log_operation_error(operation: str, error: Exception, **context) -> None:
    """Log an error during an operation with full context."""
    logger.error(
        f"Error in {operation}: {str(error)}", extra={**context, "error_type": type(error).__name__}, exc_info=True
    )
