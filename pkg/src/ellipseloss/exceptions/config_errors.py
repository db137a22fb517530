"""Configuration errors."""

from .raster_errors import EllipseLossError


class ConfigError(EllipseLossError):
    """Settings could not be loaded, validated or saved."""


class ConfigFileError(ConfigError):
    """Problem with the configuration file itself."""


class ConfigFileNotFoundError(ConfigFileError):
    """An explicitly requested configuration file does not exist."""


class ConfigFileCorruptedError(ConfigFileError):
    """The configuration file is not valid JSON; a copy was kept in the backup directory."""


class ConfigValidationError(ConfigError):
    """A setting or override is out of range, unknown or inconsistent with another setting."""


class ConfigVersionError(ConfigError):
    """The file was written by a newer release or carries an unreadable version."""
