"""Scenario-level evaluation shared by the CLI commands and batch runs."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

from ..config.settings import Settings
from .bdtr import rasterize_waypoint
from .file_manager import FileManager
from .losses import LossReport
from .losses import combined_loss
from .map_raster import DrivableMask
from .metrics import MetricsReport
from .metrics import evaluate_metrics
from .scenario import ScenarioDoc
from .toy_optimizer import OptTrace


logger = logging.getLogger(__name__)


@dataclass
class ScenarioEvaluation:
    doc: ScenarioDoc
    mask: DrivableMask
    loss: Optional[LossReport] = None
    metrics: Optional[MetricsReport] = None


def prepare(doc: ScenarioDoc) -> ScenarioEvaluation:
    return ScenarioEvaluation(doc=doc, mask=doc.mask())


def evaluate_loss(run: ScenarioEvaluation, settings: Settings) -> LossReport:
    preds, gts = run.doc.trajectories()
    run.loss = combined_loss(
        preds,
        gts,
        run.mask,
        lambda_=settings.loss.lambda_,
        beta=settings.loss.beta,
        grid=run.doc.grid_spec(),
        offroad_factor=settings.loss.offroad_factor,
        **settings.raster_kwargs(),
    )
    return run.loss


def evaluate_doc_metrics(run: ScenarioEvaluation) -> MetricsReport:
    preds, gts = run.doc.trajectories()
    run.metrics = evaluate_metrics(preds, gts, run.mask, run.doc.timestep)
    return run.metrics


def loss_payload(run: ScenarioEvaluation) -> Dict[str, Any]:
    payload = run.loss.to_dict()
    payload["actors"] = run.doc.actor_ids
    return payload


def metrics_payload(run: ScenarioEvaluation) -> Dict[str, Any]:
    payload = run.metrics.to_dict()
    payload["actors"] = run.doc.actor_ids
    return payload


def write_rasters(run: ScenarioEvaluation, settings: Settings, files: FileManager, folder: Path) -> List[Path]:
    """Mask image plus one density image per predicted waypoint."""
    written = [files.save_mask_image(run.mask, folder / "mask.pgm")]
    preds, _ = run.doc.trajectories()
    for actor_id, pred in zip(run.doc.actor_ids, preds):
        for t, s in enumerate(pred):
            raster = rasterize_waypoint(s, run.mask.grid, **settings.raster_kwargs())
            name = f"{files.sanitize_filename(actor_id)}_t{t:03d}.pgm"
            image, _ = files.save_density_image(raster.to_dense(), folder / "rasters" / name)
            written.append(image)
    logger.debug("Wrote %d raster images to %s", len(written), folder)
    return written


def write_trace_snapshots(
    trace: OptTrace, mask: DrivableMask, settings: Settings, files: FileManager, folder: Path, label: str
) -> List[Path]:
    """Density images of the toy actor along a trace.

    Every ``snapshot_every``-th row is written; with a period of 0 only the final state is.
    """
    every = settings.output.snapshot_every
    rows = [row for row in trace.rows if row.iteration % every == 0] if every else [trace.final]
    if rows[-1] is not trace.final:
        rows.append(trace.final)

    cfg = trace.config
    written = []
    for row in rows:
        raster = rasterize_waypoint(row.state, mask.grid, cfg.k, cfg.truncation_md, cfg.fixed_sigma)
        name = f"{files.sanitize_filename(label)}_iter{row.iteration:05d}.pgm"
        image, _ = files.save_density_image(raster.to_dense(), folder / "snapshots" / name)
        written.append(image)
    return written
