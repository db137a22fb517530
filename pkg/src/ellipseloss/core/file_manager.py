"""Artifact output for ellipseloss runs: JSON reports, CSV traces and grayscale images."""

import csv
import json
from datetime import datetime
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Optional
from typing import Tuple

import numpy as np
from PIL import Image
from slugify import slugify

from ..config.settings import Settings
from ..exceptions import OutputError
from ..version import __version__
from .map_raster import DrivableMask
from .toy_optimizer import OptTrace


TRACE_COLUMNS = ["iter", "x", "y", "theta", "loss", "grad_norm"]


def _to_image(values: np.ndarray) -> np.ndarray:
    """Grid arrays are ``(n_l, n_w)`` with x then y; images are rows of y, top row at max y."""
    return np.flipud(np.asarray(values).T)


def write_pgm(path: Path, pixels: np.ndarray) -> Path:
    """Write 8-bit grayscale pixels as a binary PGM (P5)."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels).save(path, format="PPM")
    except OSError as e:
        raise OutputError(f"Failed to write image {path}: {e}") from e
    return path


class FileManager:
    """Lays out run artifacts under the configured output directory."""

    def __init__(self, settings: Settings, base_path: Optional[Path] = None):
        self.settings = settings
        self.base_path = Path(base_path or settings.output.out_dir).expanduser()

    def ensure_base_directory(self) -> Path:
        try:
            self.base_path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory {self.base_path}: {e}") from e
        return self.base_path

    def sanitize_filename(self, name: str) -> str:
        return slugify(name, allow_unicode=False, separator="_") or "unnamed"

    def get_run_folder(self, name: str) -> Path:
        """Per-scenario folder under the output directory, named after ``name``."""
        folder = self.ensure_base_directory() / self.sanitize_filename(name)
        try:
            folder.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create output directory {folder}: {e}") from e
        return folder

    def write_json(self, path: Path, data: Dict[str, Any]) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=2, ensure_ascii=False)
        except OSError as e:
            raise OutputError(f"Failed to write {path}: {e}") from e
        return path

    def save_report(self, kind: str, payload: Dict[str, Any], folder: Optional[Path] = None) -> Path:
        """Write ``<kind>.json`` carrying the payload and the effective configuration."""
        folder = folder or self.ensure_base_directory()
        report = dict(payload)
        report["config"] = self.settings.to_report()
        report["_ellipseloss_metadata"] = {
            "created": datetime.now().isoformat(),
            "version": __version__,
            "kind": kind,
        }
        return self.write_json(folder / f"{self.sanitize_filename(kind)}.json", report)

    def save_trace_csv(self, trace: OptTrace, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=TRACE_COLUMNS)
                writer.writeheader()
                writer.writerows(row.to_csv_row() for row in trace.rows)
        except OSError as e:
            raise OutputError(f"Failed to write trace {path}: {e}") from e
        return path

    def save_profile_csv(self, radii: np.ndarray, magnitudes: np.ndarray, path: Path) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["md", "grad_magnitude"])
                writer.writerows((repr(float(r)), repr(float(m))) for r, m in zip(radii, magnitudes))
        except OSError as e:
            raise OutputError(f"Failed to write profile {path}: {e}") from e
        return path

    def save_mask_image(self, mask: DrivableMask, path: Path) -> Path:
        """Drivable cells at 255, non-drivable at 0."""
        return write_pgm(path, _to_image(mask.bits) * 255)

    def save_density_image(self, values: np.ndarray, path: Path) -> Tuple[Path, Path]:
        """Linear 0..255 image of a density raster plus a sidecar JSON holding the value at 255."""
        values = np.asarray(values, dtype=float)
        max_value = float(values.max()) if values.size else 0.0
        scaled = np.zeros(values.shape) if max_value <= 0 else values / max_value * 255.0
        image = write_pgm(path, np.rint(_to_image(scaled)))
        sidecar = self.write_json(
            path.with_suffix(".json"),
            {"max_value": max_value, "units": "1/m^2", "shape": list(values.shape), "mapping": "linear"},
        )
        return image, sidecar
