"""Custom exceptions for ellipseloss numerical operations."""


class EllipseLossError(Exception):
    """Base exception for all ellipseloss errors."""


class InvalidArgumentError(EllipseLossError):
    """Raised when an operation receives an argument outside its domain."""


class NumericalDegeneracyError(EllipseLossError):
    """Raised when a covariance matrix cannot be inverted."""


class AlignmentError(EllipseLossError):
    """Raised when predicted and ground-truth trajectories do not line up."""


class GridMismatchError(EllipseLossError):
    """Raised when a mask and a rasterization grid disagree."""


class BoundaryExitError(EllipseLossError):
    """Raised when an actor leaves the grid and the caller asked to fail on it."""


class OutputError(EllipseLossError):
    """Raised when an artifact cannot be written."""


def create_error_with_context(error_class: type[EllipseLossError], message: str, **context) -> EllipseLossError:
    """Create an error with additional context."""
    error = error_class(message)
    error.context = context
    return error


# User-friendly error messages and suggestions
USER_FRIENDLY_ERRORS = {
    InvalidArgumentError: {
        "message": "An argument is outside its allowed range.",
        "suggestions": [
            "Box length, width and k must be positive",
            "Lambda must be non-negative and the off-road factor at least 1",
        ],
    },
    NumericalDegeneracyError: {
        "message": "A covariance matrix is singular or not positive definite.",
        "suggestions": ["Check the actor dimensions and the fixed sigma setting"],
    },
    AlignmentError: {
        "message": "Predictions and ground truth are not aligned.",
        "suggestions": [
            "Every actor needs a predicted and a ground-truth trajectory of equal length",
            "All trajectories in a scenario must share one length and timestep",
        ],
    },
    GridMismatchError: {
        "message": "The drivable mask was built on a different grid.",
        "suggestions": ["Rasterize the mask with the same grid used for the loss"],
    },
    OutputError: {
        "message": "Could not write the requested artifacts.",
        "suggestions": ["Check that the output directory is writable", "Pass another directory with --out"],
    },
}
