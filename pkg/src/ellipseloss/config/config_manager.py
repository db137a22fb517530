"""Configuration management for ellipseloss."""

import json
import logging
import shutil
from datetime import datetime
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import pydantic

from ..core.geometry import GridSpec
from ..exceptions import ConfigFileCorruptedError
from ..exceptions import ConfigFileNotFoundError
from ..exceptions import ConfigValidationError
from ..exceptions import ConfigVersionError
from ..exceptions import EllipseLossError
from .defaults import DEFAULT_CONFIG
from .defaults import LOG_LEVELS
from .settings import Settings


logger = logging.getLogger(__name__)

CURRENT_VERSION = "1.0.0"

# Flat override keys (scenario config block and CLI flags) to (section, field alias)
OVERRIDE_PATHS = {
    "k": ("raster", "k"),
    "truncation_md": ("raster", "truncation_md"),
    "fixed_sigma": ("raster", "fixed_sigma"),
    "lambda": ("loss", "lambda"),
    "beta": ("loss", "beta"),
    "offroad_factor": ("loss", "offroad_factor"),
    "iterations": ("optimizer", "iterations"),
    "step_size_xy": ("optimizer", "step_size_xy"),
    "step_size_theta": ("optimizer", "step_size_theta"),
    "out_dir": ("output", "out_dir"),
    "emit_rasters": ("output", "emit_rasters"),
    "snapshot_every": ("output", "snapshot_every"),
    "max_workers": ("output", "max_workers"),
    "log_level": ("logging", "level"),
    "log_file": ("logging", "log_file"),
}


def _version_tuple(version: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in version.split("."))
    except ValueError as e:
        raise ConfigVersionError(f"Unreadable configuration version '{version}'") from e


def parse_truncation(value: Any) -> Optional[float]:
    """Accept a positive number or the word ``none``."""
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() == "none":
            return None
        try:
            value = float(value)
        except ValueError as e:
            raise ConfigValidationError(f"Truncation must be a number or 'none', got '{value}'") from e
    return float(value)


class ConfigManager:
    """Manages ellipseloss configuration files and the effective settings of a run."""

    def __init__(self, config_dir: Optional[Path] = None):
        self.config_dir = config_dir or self._get_default_config_dir()
        self.config_file = self.config_dir / "ellipseloss.json"
        self.backup_dir = self.config_dir / "backups"
        self.settings: Optional[Settings] = None

    def _get_default_config_dir(self) -> Path:
        """Get the default configuration directory."""
        if Path.home().exists():
            return Path.home() / ".config" / "ellipseloss"
        return Path.cwd() / "config"

    def load_config(self, config_path: Optional[Path] = None) -> Settings:
        """Load configuration from file, falling back to defaults when no file exists.

        An explicitly requested file must exist. Unreadable files are backed up and
        reported rather than silently replaced.
        """
        config_file = Path(config_path) if config_path else self.config_file

        if not config_file.exists():
            if config_path:
                raise ConfigFileNotFoundError(f"Configuration file not found: {config_file}")
            self.settings = Settings.model_validate(DEFAULT_CONFIG)
            return self.settings

        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            self._backup_corrupted_config(config_file, str(e))
            raise ConfigFileCorruptedError(f"Configuration file {config_file} is not valid JSON: {e}") from e

        if not isinstance(data, dict):
            raise ConfigFileCorruptedError(f"Configuration file {config_file} must hold a JSON object")

        data = self._migrate_config(data)
        try:
            self.settings = Settings.model_validate(data)
        except pydantic.ValidationError as e:
            raise ConfigValidationError(f"Invalid configuration in {config_file}: {e}") from e
        logger.debug("Loaded configuration from %s", config_file)
        return self.settings

    def save_config(self, config_path: Optional[Path] = None) -> Path:
        """Save current configuration to file."""
        if not self.settings:
            raise ConfigValidationError("No settings to save")

        config_file = Path(config_path) if config_path else self.config_file

        if config_file.exists():
            self._create_backup(config_file)

        self.settings.save_to_file(config_file)
        return config_file

    def _create_backup(self, config_file: Path) -> None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.backup_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy2(config_file, self.backup_dir / f"ellipseloss_{timestamp}.json")

    def _backup_corrupted_config(self, config_file: Path, error: str) -> None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        backup_file = self.backup_dir / f"corrupted_{timestamp}.json"

        try:
            self.backup_dir.mkdir(parents=True, exist_ok=True)
            shutil.copy2(config_file, backup_file)
            with open(backup_file, "a", encoding="utf-8") as f:
                f.write(f"\n# Error: {error}\n")
        except OSError:
            logger.warning("Could not back up corrupted configuration %s", config_file)

    def _migrate_config(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Migrate configuration to current version."""
        config_version = data.get("version", "0.0.0")
        if _version_tuple(config_version) > _version_tuple(CURRENT_VERSION):
            raise ConfigVersionError(
                f"Configuration version {config_version} is newer than supported version {CURRENT_VERSION}"
            )

        if config_version != CURRENT_VERSION:
            if _version_tuple(config_version) < (1, 0, 0):
                data = self._migrate_to_v1_0_0(data)
            data["version"] = CURRENT_VERSION

        return data

    def _migrate_to_v1_0_0(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Pre-1.0 files kept the loss weight as ``lambda_`` and truncation as ``truncation``."""
        loss = data.get("loss", {})
        if "lambda_" in loss:
            loss["lambda"] = loss.pop("lambda_")
        raster = data.get("raster", {})
        if "truncation" in raster:
            raster["truncation_md"] = raster.pop("truncation")

        for section in ("raster", "loss", "optimizer", "output"):
            if section not in data:
                data[section] = dict(DEFAULT_CONFIG[section])

        return data

    def reset_to_defaults(self) -> Settings:
        self.settings = Settings.model_validate(DEFAULT_CONFIG)
        return self.settings

    def validate_config(self, settings: Optional[Settings] = None) -> Tuple[bool, List[str]]:
        """Validate configuration and return (is_valid, list_of_errors)."""
        if settings is None:
            settings = self.settings or self.load_config()

        errors = []
        errors.extend(self._validate_grid_settings(settings))
        errors.extend(self._validate_run_settings(settings))
        return not errors, errors

    def _validate_grid_settings(self, settings: Settings) -> List[str]:
        errors = []

        try:
            settings.grid.to_spec()
        except EllipseLossError as e:
            errors.append(f"Scene grid: {e}")

        toy = settings.toy
        try:
            GridSpec(toy.size_m, toy.size_m, toy.cell, toy.cell)
        except EllipseLossError as e:
            errors.append(f"Toy grid: {e}")

        half = toy.size_m / 2.0
        if not -half < toy.boundary_x < half:
            errors.append("Toy boundary must lie inside the toy grid")

        return errors

    def _validate_run_settings(self, settings: Settings) -> List[str]:
        errors = []

        if settings.raster.truncation_md is not None and settings.raster.truncation_md > 10:
            errors.append("Truncation radius must be at most 10 Mahalanobis units")

        if settings.output.snapshot_every > settings.optimizer.iterations:
            errors.append("Snapshot period cannot exceed the iteration count")

        if settings.output.max_workers > 32:
            errors.append("Max workers must be between 1 and 32")

        if settings.logging.level.upper() not in LOG_LEVELS:
            errors.append(f"Invalid log level '{settings.logging.level}'. Must be one of: {LOG_LEVELS}")

        return errors

    def _validated(self, data: Dict[str, Any]) -> Settings:
        try:
            return Settings.model_validate(data)
        except pydantic.ValidationError as e:
            raise ConfigValidationError(f"Invalid configuration value: {e}") from e

    def apply_overrides(self, settings: Settings, overrides: Optional[Dict[str, Any]]) -> Settings:
        """Return a copy of ``settings`` with flat overrides applied; ``None`` values are skipped."""
        if not overrides:
            return settings

        data = settings.model_dump(by_alias=True)
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in OVERRIDE_PATHS:
                raise ConfigValidationError(f"Unknown configuration override '{key}'")
            section, field = OVERRIDE_PATHS[key]
            data[section][field] = parse_truncation(value) if key == "truncation_md" else value
        return self._validated(data)

    def effective_settings(
        self,
        config_path: Optional[Path] = None,
        scenario_overrides: Optional[Dict[str, Any]] = None,
        cli_overrides: Optional[Dict[str, Any]] = None,
    ) -> Settings:
        """Defaults, then the config file, then the scenario ``config`` block, then CLI flags."""
        settings = self.load_config(config_path)
        settings = self.apply_overrides(settings, scenario_overrides)
        settings = self.apply_overrides(settings, cli_overrides)

        is_valid, errors = self.validate_config(settings)
        if not is_valid:
            raise ConfigValidationError("; ".join(errors))

        self.settings = settings
        return settings
