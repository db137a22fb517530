"""Tests for run artifact output."""

import csv
import json

import numpy as np
import pytest

from ellipseloss.core.file_manager import TRACE_COLUMNS
from ellipseloss.core.file_manager import FileManager
from ellipseloss.core.file_manager import write_pgm
from ellipseloss.core.toy_optimizer import OptimizerConfig
from ellipseloss.core.toy_optimizer import build_toy_scene
from ellipseloss.core.toy_optimizer import run_toy
from ellipseloss.exceptions import OutputError
from ellipseloss.version import __version__


@pytest.fixture
def file_manager(test_settings):
    return FileManager(test_settings)


class TestFolders:
    def test_run_folder_is_slugified(self, file_manager):
        folder = file_manager.get_run_folder("My Scene #1")
        assert folder.name == "my_scene_1"
        assert folder.is_dir()
        assert folder.parent == file_manager.base_path

    def test_empty_name(self, file_manager):
        assert file_manager.sanitize_filename("???") == "unnamed"

    def test_unwritable_output_directory(self, temp_dir, test_settings):
        blocker = temp_dir / "blocker"
        blocker.write_text("file in the way", encoding="utf-8")
        with pytest.raises(OutputError):
            FileManager(test_settings, blocker / "out").ensure_base_directory()


class TestReports:
    """JSON reports carry the effective configuration."""

    def test_report_embeds_config_and_metadata(self, file_manager):
        path = file_manager.save_report("loss", {"total": 1.5})
        data = json.loads(path.read_text(encoding="utf-8"))
        assert path.name == "loss.json"
        assert data["total"] == 1.5
        assert data["config"]["loss"]["lambda"] == pytest.approx(0.03)
        assert data["config"]["raster"]["truncation_md"] == 1.0
        assert data["_ellipseloss_metadata"]["kind"] == "loss"
        assert data["_ellipseloss_metadata"]["version"] == __version__


class TestImages:
    """Binary PGM output."""

    def test_pgm_header_and_pixels(self, temp_dir, read_image):
        pixels = np.array([[0, 255, 0], [255, 0, 255]], dtype=np.uint8)
        path = write_pgm(temp_dir / "img.pgm", pixels)
        assert path.read_bytes().startswith(b"P5\n3 2\n255\n")
        np.testing.assert_array_equal(read_image(path), pixels)

    def test_mask_image_orientation(self, file_manager, half_plane_mask, temp_dir, read_image):
        image = read_image(file_manager.save_mask_image(half_plane_mask, temp_dir / "mask.pgm"))
        assert image.shape == (100, 100)
        assert set(np.unique(image).tolist()) == {0, 255}
        # Drivable half (x < 0) on the left of the image
        assert np.all(image[:, :50] == 255)
        assert np.all(image[:, 50:] == 0)

    def test_density_image_and_sidecar(self, file_manager, temp_dir, read_image):
        values = np.zeros((4, 3))
        values[1, 2] = 0.5
        values[2, 0] = 0.25
        image_path, sidecar_path = file_manager.save_density_image(values, temp_dir / "density.pgm")
        image = read_image(image_path)
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        assert image.shape == (3, 4)
        assert image.max() == 255
        # Grid cell (1, 2) is at the top row (max y), second column
        assert image[0, 1] == 255
        assert image[2, 2] == 128
        assert sidecar["max_value"] == 0.5
        assert sidecar["shape"] == [4, 3]

    def test_all_zero_density(self, file_manager, temp_dir, read_image):
        image_path, sidecar_path = file_manager.save_density_image(np.zeros((2, 2)), temp_dir / "zero.pgm")
        assert read_image(image_path).max() == 0
        assert json.loads(sidecar_path.read_text(encoding="utf-8"))["max_value"] == 0.0

    def test_image_under_a_file_raises(self, temp_dir):
        blocker = temp_dir / "blocker"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(OutputError):
            write_pgm(blocker / "img.pgm", np.zeros((2, 2), dtype=np.uint8))


class TestCsv:
    def test_trace_columns(self, file_manager, temp_dir):
        scene = build_toy_scene()
        trace = run_toy(scene.initial, scene.mask, OptimizerConfig(iterations=3))
        path = file_manager.save_trace_csv(trace, temp_dir / "trace.csv")
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == TRACE_COLUMNS
        assert [int(r["iter"]) for r in rows] == [0, 1, 2, 3]
        assert float(rows[0]["x"]) == scene.initial.x

    def test_profile_csv(self, file_manager, temp_dir):
        path = file_manager.save_profile_csv(np.array([0.0, 1.0]), np.array([0.0, 0.25]), temp_dir / "profile.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == ["md,grad_magnitude", "0.0,0.0", "1.0,0.25"]
