"""
Exception types shared by the solvers, selectors and the CLI.

Everything derives from ValueError / RuntimeError so callers that only know the
builtins keep working.
"""

from __future__ import annotations

from typing import Optional


class ShapeError(ValueError):
    """Arrays whose dimensions do not fit the block structure."""


class UndefinedInputError(ValueError):
    """Input for which the requested quantity is not defined."""


class NumericalError(RuntimeError):
    """NaN or inf appeared inside a solver."""


class SelectionError(RuntimeError):
    """No usable grid point (or fold) was left to select from."""


class CorruptFileError(ValueError):
    """A matrix or table file could not be parsed."""


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, value: Optional[object] = None):
        self.field = field
        self.value = value
        super().__init__(f"{field}: {message}")
