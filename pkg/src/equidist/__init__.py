"""Exponential sums over finite fields, their limit measures, and W1 distances."""

from .errors import (
    AcceptanceFailure,
    ConfigError,
    EquidistError,
    MathGuardError,
)
from .ff import FieldContext, build_field

__all__ = [
    "AcceptanceFailure",
    "ConfigError",
    "EquidistError",
    "FieldContext",
    "MathGuardError",
    "build_field",
]
__version__ = "0.1.0"
