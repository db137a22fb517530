"""Tests for scenario evaluation and raster artifacts."""

import pytest

from ellipseloss.core.evaluation import evaluate_doc_metrics
from ellipseloss.core.evaluation import evaluate_loss
from ellipseloss.core.evaluation import loss_payload
from ellipseloss.core.evaluation import metrics_payload
from ellipseloss.core.evaluation import prepare
from ellipseloss.core.evaluation import write_rasters
from ellipseloss.core.evaluation import write_trace_snapshots
from ellipseloss.core.file_manager import FileManager
from ellipseloss.core.scenario import load_scenario
from ellipseloss.core.toy_optimizer import OptimizerConfig
from ellipseloss.core.toy_optimizer import build_toy_scene
from ellipseloss.core.toy_optimizer import run_toy


class TestScenarioEvaluation:
    def test_loss_payload(self, scenario_file, test_settings):
        run = prepare(load_scenario(scenario_file))
        report = evaluate_loss(run, test_settings)
        payload = loss_payload(run)
        # Only the first waypoint is off by 0.5 m in y
        assert report.vanilla == pytest.approx(0.125)
        assert payload["actors"] == ["car_1"]
        assert payload["n_waypoints"] == 2
        assert payload["total"] == pytest.approx(report.vanilla + 0.03 * report.ellipse)

    def test_metrics_payload(self, scenario_file):
        run = prepare(load_scenario(scenario_file))
        metrics = evaluate_doc_metrics(run)
        payload = metrics_payload(run)
        assert metrics.l2.per_horizon.tolist() == [0.5, 0.0]
        assert payload["horizons"] == ["@0.1s", "@0.2s"]
        assert payload["ctr_orfp_avg"] == 0.0


class TestRasterArtifacts:
    def test_mask_and_one_image_per_waypoint(self, scenario_file, test_settings, temp_dir):
        run = prepare(load_scenario(scenario_file))
        written = write_rasters(run, test_settings, FileManager(test_settings), temp_dir / "scene")
        names = sorted(path.name for path in written)
        assert names == ["car_1_t000.pgm", "car_1_t001.pgm", "mask.pgm"]
        assert (temp_dir / "scene" / "rasters" / "car_1_t000.json").exists()

    @pytest.mark.parametrize("every,expected", [(0, [7]), (3, [0, 3, 6, 7]), (7, [0, 7])])
    def test_trace_snapshots(self, test_settings, temp_dir, every, expected):
        scene = build_toy_scene()
        trace = run_toy(scene.initial, scene.mask, OptimizerConfig(iterations=7))
        settings = test_settings.model_copy(
            update={"output": test_settings.output.model_copy(update={"snapshot_every": every})}
        )
        written = write_trace_snapshots(trace, scene.mask, settings, FileManager(settings), temp_dir, "1md")
        assert [path.name for path in written] == [f"1md_iter{i:05d}.pgm" for i in expected]
