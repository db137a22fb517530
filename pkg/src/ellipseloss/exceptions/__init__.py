"""Custom exceptions for ellipseloss."""

from .config_errors import ConfigError
from .config_errors import ConfigFileCorruptedError
from .config_errors import ConfigFileError
from .config_errors import ConfigFileNotFoundError
from .config_errors import ConfigValidationError
from .config_errors import ConfigVersionError
from .raster_errors import USER_FRIENDLY_ERRORS
from .raster_errors import AlignmentError
from .raster_errors import BoundaryExitError
from .raster_errors import EllipseLossError
from .raster_errors import GridMismatchError
from .raster_errors import InvalidArgumentError
from .raster_errors import NumericalDegeneracyError
from .raster_errors import OutputError
from .raster_errors import create_error_with_context
from .validation_errors import PolygonValidationError
from .validation_errors import ScenarioParseError
from .validation_errors import ScenarioValidationError
from .validation_errors import SchemaVersionError
from .validation_errors import ValidationError


# Process exit status per error family, most specific first
EXIT_CODES = (
    (ValidationError, 3),
    (ConfigError, 4),
    (OutputError, 5),
    (InvalidArgumentError, 6),
    (NumericalDegeneracyError, 6),
    (AlignmentError, 3),
    (GridMismatchError, 4),
    (EllipseLossError, 1),
)


USER_FRIENDLY_ERRORS.update(
    {
        ValidationError: {
            "message": "The scenario file is invalid.",
            "suggestions": [
                "Check the field and actor named in the error",
                "Scenario files need schema_version 1, a grid, drivable polygons and actors",
            ],
        },
        ConfigError: {
            "message": "The configuration could not be used.",
            "suggestions": [
                "Regenerate a configuration with 'ellipseloss init-config'",
                "Check value ranges: k > 0, lambda >= 0, truncation > 0 or 'none'",
            ],
        },
    }
)


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit status of its family."""
    return next((code for error_class, code in EXIT_CODES if isinstance(error, error_class)), 1)


def friendly_error(error: BaseException) -> dict:
    """Message and suggestions of the closest registered family of ``error``."""
    for error_class in type(error).__mro__:
        if error_class in USER_FRIENDLY_ERRORS:
            return USER_FRIENDLY_ERRORS[error_class]
    return {"message": "Unexpected error.", "suggestions": ["Run again with --verbose for details"]}


__all__ = [
    "EXIT_CODES",
    "USER_FRIENDLY_ERRORS",
    "AlignmentError",
    "BoundaryExitError",
    "ConfigError",
    "ConfigFileCorruptedError",
    "ConfigFileError",
    "ConfigFileNotFoundError",
    "ConfigValidationError",
    "ConfigVersionError",
    "EllipseLossError",
    "GridMismatchError",
    "InvalidArgumentError",
    "NumericalDegeneracyError",
    "OutputError",
    "PolygonValidationError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "SchemaVersionError",
    "ValidationError",
    "create_error_with_context",
    "exit_code_for",
    "friendly_error",
]
