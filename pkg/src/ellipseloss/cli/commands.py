"""Command surface of the ellipseloss CLI."""

import functools
import logging
import math
from dataclasses import asdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import click
import numpy as np
from rich.console import Console

from ..config.config_manager import ConfigManager
from ..config.config_manager import parse_truncation
from ..config.settings import Settings
from ..core.batch_processor import BatchProcessor
from ..core.bdtr import radial_gradient_profile
from ..core.evaluation import evaluate_doc_metrics
from ..core.evaluation import evaluate_loss
from ..core.evaluation import loss_payload
from ..core.evaluation import metrics_payload
from ..core.evaluation import prepare
from ..core.evaluation import write_rasters
from ..core.evaluation import write_trace_snapshots
from ..core.file_manager import FileManager
from ..core.geometry import WaypointState
from ..core.map_raster import DrivableMask
from ..core.scenario import ScenarioDoc
from ..core.scenario import load_scenario
from ..core.scenario import scenario_from_toy
from ..core.scenario import write_scenario
from ..core.toy_optimizer import TRUNCATION_VARIANTS
from ..core.toy_optimizer import run_truncation_sweep
from ..exceptions import ConfigFileError
from ..exceptions import EllipseLossError
from ..exceptions import exit_code_for
from ..utils.logging_setup import setup_logging
from ..version import __version__
from .report_renderer import ReportRenderer
from .styles import ELLIPSELOSS_THEME


logger = logging.getLogger(__name__)

SCENARIO_PATH = click.Path(exists=True, dir_okay=False, path_type=Path)

# Flag destinations that are named differently in the configuration overrides
FLAG_TO_OVERRIDE = {"lambda_": "lambda"}


@dataclass
class AppContext:
    """State shared by every command of one invocation."""

    config_manager: ConfigManager
    console: Console
    renderer: ReportRenderer
    config_path: Optional[Path] = None
    verbose: bool = False

    def settings(
        self, scenario_overrides: Optional[Dict[str, Any]] = None, cli_overrides: Optional[Dict[str, Any]] = None
    ) -> Settings:
        """Effective settings of the run; also (re)configures logging from them."""
        cli_overrides = dict(cli_overrides or {})
        if self.verbose:
            cli_overrides["log_level"] = "DEBUG"
        settings = self.config_manager.effective_settings(self.config_path, scenario_overrides, cli_overrides)
        setup_logging(settings.logging.level, settings.logging.log_file or None, self.console)
        return settings


def add_options(*options: Callable) -> Callable:
    def decorator(func: Callable) -> Callable:
        for option in reversed(options):
            func = option(func)
        return func

    return decorator


lambda_option = click.option("--lambda", "lambda_", type=float, help="Ellipse loss weight [default: 0.03]")
k_option = click.option("--k", "k", type=float, help="Box-to-sigma scale factor [default: 0.7071067811865476]")
truncation_option = click.option(
    "--truncation-md", "truncation_md", help="Truncation radius in Md, or 'none' [default: 1]"
)
beta_option = click.option("--beta", type=float, help="Smooth-L1 transition point [default: 1]")
iters_option = click.option("--iters", "iterations", type=int, help="Toy gradient steps [default: 1000]")
step_xy_option = click.option("--step-xy", "step_size_xy", type=float, help="Toy step size for x and y")
step_theta_option = click.option("--step-theta", "step_size_theta", type=float, help="Toy step size for the heading")
out_option = click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory")
emit_rasters_option = click.option("--emit-rasters", is_flag=True, help="Also write raster images")

LOSS_OPTIONS = (lambda_option, k_option, truncation_option, beta_option)
OUTPUT_OPTIONS = (out_option, emit_rasters_option)
OPTIMIZER_OPTIONS = (k_option, iters_option, step_xy_option, step_theta_option)


def overrides_from_flags(flags: Dict[str, Any]) -> Dict[str, Any]:
    """Flat configuration overrides from command flags; flags left unset are dropped."""
    overrides = {}
    for name, value in flags.items():
        if value is None or value is False:
            continue
        overrides[FLAG_TO_OVERRIDE.get(name, name)] = value
    return overrides


def handle_errors(func: Callable) -> Callable:
    """Render package errors as a panel and exit with the status of their family."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        app = ctx.find_object(AppContext)
        try:
            return func(*args, **kwargs)
        except EllipseLossError as e:
            logger.debug("Command %s failed", ctx.info_name, exc_info=True)
            app.renderer.show_error(e, app.verbose)
            ctx.exit(exit_code_for(e))

    return wrapper


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="ellipseloss")
@click.option(
    "--config", "-c", "config_path", type=click.Path(dir_okay=False, path_type=Path), help="Configuration file"
)
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], verbose: bool):
    """ellipseloss - box-aware trajectory rasterization, ellipse loss and off-road metrics."""
    console = Console(theme=ELLIPSELOSS_THEME)
    ctx.obj = AppContext(ConfigManager(), console, ReportRenderer(console), config_path, verbose)


def _scenario_run(app: AppContext, scenario: Path, flags: Dict[str, Any]) -> Tuple[ScenarioDoc, Settings]:
    doc = load_scenario(scenario)
    return doc, app.settings(doc.config.overrides(), overrides_from_flags(flags))


@cli.command("loss")
@click.option("--scenario", "-s", type=SCENARIO_PATH, required=True, help="Scenario file")
@add_options(*LOSS_OPTIONS, *OUTPUT_OPTIONS)
@click.pass_obj
@handle_errors
def loss_command(app: AppContext, scenario: Path, **flags):
    """Vanilla, ellipse and combined training loss of a scenario."""
    doc, settings = _scenario_run(app, scenario, flags)
    run = prepare(doc)
    report = evaluate_loss(run, settings)

    files = FileManager(settings)
    folder = files.get_run_folder(scenario.stem)
    written = [files.save_report("loss", loss_payload(run), folder)]
    if settings.output.emit_rasters:
        written.extend(write_rasters(run, settings, files, folder))

    logger.info("Loss of %s: total %.6g over %d waypoints", scenario.name, report.total, report.n_waypoints)
    app.renderer.show_loss_report(report, doc.actor_ids)
    app.renderer.show_written(written)


@cli.command("metrics")
@click.option("--scenario", "-s", type=SCENARIO_PATH, required=True, help="Scenario file")
@add_options(*OUTPUT_OPTIONS)
@click.pass_obj
@handle_errors
def metrics_command(app: AppContext, scenario: Path, **flags):
    """Displacement error and off-road false positive ratios of a scenario."""
    doc, settings = _scenario_run(app, scenario, flags)
    run = prepare(doc)
    report = evaluate_doc_metrics(run)

    files = FileManager(settings)
    folder = files.get_run_folder(scenario.stem)
    written = [files.save_report("metrics", metrics_payload(run), folder)]
    if settings.output.emit_rasters:
        written.append(files.save_mask_image(run.mask, folder / "mask.pgm"))

    logger.info("Metrics of %s: %d actors, horizon %d", scenario.name, report.n_actors, report.horizon)
    app.renderer.show_metrics_report(report)
    app.renderer.show_written(written)


@cli.command("raster")
@click.option("--scenario", "-s", type=SCENARIO_PATH, help="Scenario file [default: the toy scene]")
@add_options(k_option, truncation_option, out_option)
@click.pass_obj
@handle_errors
def raster_command(app: AppContext, scenario: Optional[Path], **flags):
    """Write the drivable mask and every predicted waypoint's raster as grayscale images."""
    if scenario:
        doc, settings = _scenario_run(app, scenario, flags)
        name = scenario.stem
    else:
        settings = app.settings(None, overrides_from_flags(flags))
        doc, name = scenario_from_toy(settings.toy.build()), "toy_scene"

    run = prepare(doc)
    files = FileManager(settings)
    written = write_rasters(run, settings, files, files.get_run_folder(name))

    n_l, n_w = run.mask.grid.shape
    app.renderer.show_success(f"Rasterized {len(doc.actors)} actors on a {n_l}×{n_w} grid")
    app.renderer.show_written(written[:1])
    app.console.print(f"[dim]{len(written) - 1} waypoint rasters under {written[0].parent / 'rasters'}[/dim]")


def _toy_inputs(doc: Optional[ScenarioDoc], settings: Settings) -> Tuple[WaypointState, DrivableMask]:
    """First predicted waypoint of the first actor, or the configured toy scene's actor."""
    if doc is None:
        scene = settings.toy.build()
        return scene.initial, scene.mask
    preds, _ = doc.trajectories()
    return preds[0][0], doc.mask()


def _run_variants(
    app: AppContext,
    settings: Settings,
    doc: Optional[ScenarioDoc],
    variants: Sequence[Optional[float]],
    name: str,
    kind: str,
) -> None:
    initial, mask = _toy_inputs(doc, settings)
    boundary_x = settings.toy.boundary_x
    entries = run_truncation_sweep(
        initial, mask, settings.optimizer_config(), variants, boundary_x, settings.output.max_workers
    )

    files = FileManager(settings)
    folder = files.get_run_folder(name)
    snapshots = settings.output.emit_rasters or settings.output.snapshot_every > 0
    written: List[Path] = []
    for entry in entries:
        csv_name = "trace.csv" if len(entries) == 1 else f"trace_{files.sanitize_filename(entry.label)}.csv"
        written.append(files.save_trace_csv(entry.trace, folder / csv_name))
        if snapshots:
            written.extend(write_trace_snapshots(entry.trace, mask, settings, files, folder, entry.label))
    if snapshots:
        written.append(files.save_mask_image(mask, folder / "mask.pgm"))

    payload = {
        "initial": asdict(initial),
        "boundary_x": boundary_x,
        "variants": [{**entry.to_dict(), "final_state": asdict(entry.trace.final.state)} for entry in entries],
    }
    written.append(files.save_report(kind, payload, folder))

    for entry in entries:
        logger.info(
            "%s: %s after %d steps, distance %.4g m",
            entry.label,
            entry.trace.status.value,
            len(entry.trace) - 1,
            entry.final_distance,
        )
    app.renderer.show_sweep(entries)
    app.renderer.show_written(written if len(written) <= 12 else written[-1:])


def _toy_command(
    app: AppContext, scenario: Optional[Path], truncations: Sequence[str], flags: Dict[str, Any], kind: str
) -> None:
    variants = [parse_truncation(value) for value in truncations]
    overrides = overrides_from_flags(flags)
    if len(truncations) == 1:
        overrides["truncation_md"] = truncations[0]

    doc = load_scenario(scenario) if scenario else None
    settings = app.settings(doc.config.overrides() if doc else None, overrides)
    if not variants:
        variants = [settings.raster.truncation_md] if kind == "toy" else list(TRUNCATION_VARIANTS)

    name = f"{scenario.stem}_{kind}" if scenario else kind
    _run_variants(app, settings, doc, variants, name, kind)


toy_options = (
    click.option("--scenario", "-s", type=SCENARIO_PATH, help="Start from this scenario's first predicted waypoint"),
    click.option(
        "--truncation-md", "truncations", multiple=True, help="Truncation radius in Md or 'none'; repeat to compare"
    ),
    *OPTIMIZER_OPTIONS,
    click.option("--snapshot-every", type=int, help="Write a raster snapshot every N iterations"),
    *OUTPUT_OPTIONS,
)


@cli.command("toy")
@add_options(*toy_options)
@click.pass_obj
@handle_errors
def toy_command(app: AppContext, scenario: Optional[Path], truncations: Tuple[str, ...], **flags):
    """Gradient descent of one actor on the ellipse loss next to a road boundary."""
    _toy_command(app, scenario, truncations, flags, "toy")


@cli.command("sweep")
@add_options(*toy_options)
@click.pass_obj
@handle_errors
def sweep_command(app: AppContext, scenario: Optional[Path], truncations: Tuple[str, ...], **flags):
    """Toy descent once per truncation radius (0.5, 1, 2 Md and none unless given)."""
    _toy_command(app, scenario, truncations, flags, "sweep")


@cli.command("profile")
@click.option("--length", type=float, default=4.0, show_default=True, help="Box length")
@click.option("--width", type=float, default=2.0, show_default=True, help="Box width")
@click.option("--angle-deg", type=float, default=0.0, show_default=True, help="Ray direction relative to the long axis")
@click.option("--max-md", type=float, default=3.0, show_default=True, help="Largest Mahalanobis radius sampled")
@click.option("--samples", type=int, default=3001, show_default=True, help="Samples along the ray")
@add_options(k_option, out_option)
@click.pass_obj
@handle_errors
def profile_command(
    app: AppContext, length: float, width: float, angle_deg: float, max_md: float, samples: int, **flags
):
    """Gradient magnitude of the untruncated density along a ray from the box center."""
    settings = app.settings(None, overrides_from_flags(flags))
    state = WaypointState(0.0, 0.0, length, width, 0.0)
    radii, magnitudes = radial_gradient_profile(
        state, settings.raster.k, math.radians(angle_deg), max_md, samples, settings.raster.fixed_sigma
    )
    peak_md = float(radii[int(np.argmax(magnitudes))])

    files = FileManager(settings)
    folder = files.get_run_folder("profile")
    summary = {"length": length, "width": width, "angle_deg": angle_deg, "k": settings.raster.k, "samples": samples}
    written = [
        files.save_profile_csv(radii, magnitudes, folder / "profile.csv"),
        files.save_report("profile", {"peak_md": peak_md, **summary}, folder),
    ]
    app.renderer.show_profile(peak_md, summary)
    app.renderer.show_written(written)


@cli.command("batch")
@click.argument("scenarios", nargs=-1, type=SCENARIO_PATH)
@click.option("--list", "-l", "list_file", type=SCENARIO_PATH, help="Text file with one scenario path per line")
@click.option("--workers", type=int, help="Scenarios evaluated concurrently")
@add_options(*LOSS_OPTIONS, *OUTPUT_OPTIONS)
@click.pass_obj
@handle_errors
def batch_command(
    app: AppContext, scenarios: Tuple[Path, ...], list_file: Optional[Path], workers: Optional[int], **flags
):
    """Loss and metrics of several scenarios, each into its own output folder."""
    overrides = overrides_from_flags(flags)
    settings = app.settings(None, overrides)
    processor = BatchProcessor(app.config_manager, settings, overrides, app.console)

    paths = list(scenarios)
    if list_file:
        paths.extend(processor.load_scenario_list(list_file))
    if not paths:
        raise click.UsageError("Give scenario files or --list")

    results = processor.process_batch(paths, workers)
    app.renderer.show_batch_summary(results, processor.get_batch_statistics(results))
    failed = [result for result in results if result["status"] != "completed"]
    if failed:
        click.get_current_context().exit(failed[0]["exit_code"])


@cli.command("toy-scene")
@click.option(
    "--output",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    default=Path("toy_scene.json"),
    show_default=True,
    help="Scenario file to write",
)
@click.pass_obj
@handle_errors
def toy_scene_command(app: AppContext, output: Path):
    """Write the configured half-plane toy scene as a scenario file."""
    settings = app.settings()
    path = write_scenario(scenario_from_toy(settings.toy.build()), output)
    app.renderer.show_success(f"Toy scene written to {path}")


@cli.command("init-config")
@click.option("--force", is_flag=True, help="Overwrite an existing configuration file")
@click.pass_obj
@handle_errors
def init_config_command(app: AppContext, force: bool):
    """Write the default configuration to --config or the user configuration file."""
    target = Path(app.config_path or app.config_manager.config_file)
    if target.exists() and not force:
        raise ConfigFileError(f"{target} already exists; use --force to overwrite it")
    app.config_manager.reset_to_defaults()
    path = app.config_manager.save_config(target)
    app.renderer.show_success(f"Default configuration written to {path}")
