"""Pytest configuration and fixtures."""

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from ellipseloss.config.config_manager import ConfigManager
from ellipseloss.config.settings import OutputSettings
from ellipseloss.config.settings import Settings
from ellipseloss.core.geometry import GridSpec
from ellipseloss.core.map_raster import Polygon
from ellipseloss.core.map_raster import PolygonSet
from ellipseloss.core.map_raster import rasterize_drivable


@pytest.fixture
def temp_dir(tmp_path):
    """Scratch directory for a test."""
    return tmp_path


@pytest.fixture
def test_settings(temp_dir):
    """Default settings writing into the scratch directory."""
    return Settings(output=OutputSettings(out_dir=str(temp_dir / "out")))


@pytest.fixture
def config_manager(temp_dir):
    """Config manager rooted in the scratch directory, never the user's home."""
    return ConfigManager(config_dir=temp_dir / "config")


@pytest.fixture
def half_plane_grid():
    """10 m × 10 m grid of 0.1 m cells centered at the origin."""
    return GridSpec.centered(10.0, 10.0, 0.1)


@pytest.fixture
def half_plane_mask(half_plane_grid):
    """Drivable for x < 0, non-drivable for x > 0."""
    x_min, y_min = half_plane_grid.origin
    polys = PolygonSet((Polygon.rectangle(x_min, y_min, 0.0, y_min + half_plane_grid.width_m),))
    return rasterize_drivable(polys, half_plane_grid)


def scenario_dict(**overrides):
    """Minimal valid scenario: one actor on a 20 m × 10 m grid with a 6 m wide road along x."""
    doc = {
        "schema_version": 1,
        "grid": {"length_m": 20.0, "width_m": 10.0, "cell_l": 0.5, "cell_w": 0.5, "origin": [-10.0, -5.0]},
        "timestep": 0.1,
        "drivable": [{"exterior": [[-10.0, -3.0], [10.0, -3.0], [10.0, 3.0], [-10.0, 3.0]], "holes": []}],
        "actors": [
            {
                "id": "car_1",
                "predicted": {"length": 4.0, "width": 2.0, "waypoints": [[-5.0, 0.5, 0.0], [-3.0, 0.0, 0.0]]},
                "ground_truth": {"length": 4.0, "width": 2.0, "waypoints": [[-5.0, 0.0, 0.0], [-3.0, 0.0, 0.0]]},
            }
        ],
        "config": {},
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def make_scenario():
    """Factory for minimal scenario dicts with top-level overrides."""
    return scenario_dict


@pytest.fixture
def scenario_file(temp_dir):
    """Minimal scenario written to disk."""
    path = temp_dir / "scene.json"
    path.write_text(json.dumps(scenario_dict()), encoding="utf-8")
    return path


@pytest.fixture
def write_scenario_file(temp_dir):
    """Write a scenario dict under a given name and return its path."""

    def _write(name: str, doc: dict) -> Path:
        path = temp_dir / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write



@pytest.fixture
def read_image():
    """Load a grayscale image written by the package as a uint8 array."""

    def _read(path: Path) -> np.ndarray:
        with Image.open(path) as image:
            assert image.format == "PPM"
            assert image.mode == "L"
            return np.asarray(image).copy()

    return _read
