"""
Error hierarchy shared by every module.

Each class carries the process exit code the CLI reports for it:
0 success, 1 usage, 2 data, 3 I/O, 4 numerical failure.
"""
from __future__ import annotations

from typing import Optional

from pydantic import ValidationError


class XrayNetError(Exception):
    """Base class for all errors raised by the package."""

    exit_code: int = 1


class UsageError(XrayNetError, ValueError):
    """Caller passed arguments that violate an operation's preconditions."""

    exit_code = 1


class ParameterError(UsageError):
    """A scalar parameter is outside its allowed range."""


class ConfigurationError(UsageError):
    """A configuration record (model, training, split) is invalid."""


class ShapeError(XrayNetError, ValueError):
    """Tensor shapes are incompatible for the requested operation."""

    exit_code = 2


class SizeError(ShapeError):
    """Buffer length does not match the product of the requested shape."""


class DataError(XrayNetError, ValueError):
    """Input data (manifest rows, images, labels) is malformed."""

    exit_code = 2


class FormatError(DataError):
    """A binary file does not follow the checkpoint layout."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class StorageError(XrayNetError, OSError):
    """A file could not be read or written."""

    exit_code = 3


class NumericalError(XrayNetError, ArithmeticError):
    """Training produced a non-finite value."""

    exit_code = 4


def validate_record(model_cls, data: dict):
    """Build a pydantic record, reporting validation failures as ConfigurationError."""
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model_cls.__name__}: {err['msg']}" for err in e.errors()
        )
        raise ConfigurationError(f"Invalid {model_cls.__name__}: {problems}") from None
