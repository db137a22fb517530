"""Validation-related exceptions for ellipseloss."""

from typing import Optional

from .raster_errors import EllipseLossError


class ValidationError(EllipseLossError):
    """Base exception for validation errors."""


class PolygonValidationError(ValidationError):
    """Raised when a drivable-region ring is degenerate."""

    def __init__(self, message: str, polygon_index: int, ring: str):
        super().__init__(message)
        self.polygon_index = polygon_index
        self.ring = ring


class ScenarioParseError(ValidationError):
    """Raised when a scenario file is not valid JSON."""


class SchemaVersionError(ValidationError):
    """Raised when a scenario file declares an unsupported schema version."""


class ScenarioValidationError(ValidationError):
    """Raised when a scenario document violates a module invariant."""

    def __init__(self, message: str, actor_id: Optional[str] = None, field: Optional[str] = None):
        super().__init__(message)
        self.actor_id = actor_id
        self.field = field
