"""Rich rendering of ellipseloss reports."""

from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence

import numpy as np
from rich.box import ROUNDED
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from ..core.losses import LossReport
from ..core.metrics import MetricsReport
from ..core.metrics import horizon_labels
from ..core.toy_optimizer import SweepEntry
from ..exceptions import friendly_error
from .styles import BORDER_STYLE


def _fmt(value: Optional[float], digits: int = 6) -> str:
    return "-" if value is None else f"{value:.{digits}g}"


class ReportRenderer:
    """Prints reports, traces and errors to a rich console."""

    def __init__(self, console: Console):
        self.console = console

    def show_error(self, error: BaseException, verbose: bool = False) -> None:
        info = friendly_error(error)
        content = f"[error]{info['message']}[/error]\n\n{escape(str(error))}"
        context = getattr(error, "context", None)
        if context:
            content += "\n" + escape(", ".join(f"{key}={value}" for key, value in context.items()))
        if info["suggestions"]:
            content += "\n\n" + "\n".join(f"[dim]• {tip}[/dim]" for tip in info["suggestions"])
        self.console.print(Panel(content, title="[bold red]Error[/bold red]", border_style="red", box=ROUNDED))
        if verbose:
            self.console.print_exception()

    def show_success(self, message: str) -> None:
        self.console.print(f"[success]{message}[/success]")

    def show_warning(self, message: str) -> None:
        self.console.print(f"[warning]{message}[/warning]")

    def show_written(self, paths: Sequence[Path]) -> None:
        for path in paths:
            self.console.print(f"[dim]wrote {path}[/dim]")

    def show_loss_report(self, report: LossReport, actor_ids: Sequence[str]) -> None:
        table = Table(title="Loss", border_style=BORDER_STYLE, box=ROUNDED)
        table.add_column("Term", style="report.header")
        table.add_column("Sum", style="report.value", justify="right")
        table.add_column("Per waypoint", style="report.value", justify="right")

        n = report.n_waypoints
        table.add_row("vanilla", _fmt(report.vanilla), _fmt(report.vanilla_mean))
        table.add_row("ellipse", _fmt(report.ellipse), _fmt(report.ellipse_mean))
        table.add_row(f"total (λ={report.lambda_:g})", _fmt(report.total), _fmt(report.total / n))
        if report.offroad_reweighted is not None:
            reweighted = report.offroad_reweighted
            table.add_row("off-road reweighted", _fmt(reweighted), _fmt(reweighted / n), style="report.offroad")
        self.console.print(table)

        actors = Table(title="Ellipse loss per actor", border_style=BORDER_STYLE, box=ROUNDED)
        actors.add_column("Actor", style="report.header")
        actors.add_column("Ellipse", style="report.value", justify="right")
        actors.add_column("Gated steps", justify="right")
        for actor_id, row, gate in zip(actor_ids, report.contributions, report.indicators):
            actors.add_row(actor_id, _fmt(float(np.sum(row))), f"{int(gate.sum())}/{len(gate)}")
        self.console.print(actors)

    def show_metrics_report(self, report: MetricsReport) -> None:
        table = Table(title="Metrics", border_style=BORDER_STYLE, box=ROUNDED)
        final = horizon_labels(report.horizon, report.timestep)[-1]
        table.add_column("Metric", style="report.header")
        table.add_column("Avg", style="report.value", justify="right")
        table.add_column(final, style="report.value", justify="right")

        table.add_row(escape("l2 [m]"), _fmt(report.l2.average), _fmt(report.l2.at_final))
        for name, orfp in (("CtrORFP [%]", report.ctr_orfp), ("BoxORFP [%]", report.box_orfp)):
            table.add_row(escape(name), _fmt(100 * orfp.average, 4), _fmt(100 * orfp.at_final, 4))
        self.console.print(table)
        self.console.print(f"[dim]{report.n_actors} actors × {report.horizon} horizons[/dim]")

    def show_sweep(self, entries: List[SweepEntry], title: str = "Truncation variants") -> None:
        table = Table(title=title, border_style=BORDER_STYLE, box=ROUNDED)
        table.add_column("Variant", style="report.header")
        table.add_column("Status")
        table.add_column("Iterations", justify="right")
        table.add_column("Final loss", style="report.value", justify="right")
        table.add_column(escape("Distance [m]"), style="report.value", justify="right")
        table.add_column("Δ vs 1md", justify="right")
        table.add_column(escape("Heading residual [deg]"), justify="right")

        for entry in entries:
            delta = entry.relative_distance_delta
            table.add_row(
                entry.label,
                entry.trace.status.value,
                str(len(entry.trace) - 1),
                _fmt(entry.final_loss, 4),
                _fmt(entry.final_distance, 4),
                "-" if delta is None else f"{100 * delta:+.1f}%",
                _fmt(float(np.degrees(entry.orientation_residual)), 4),
            )
        self.console.print(table)

    def show_profile(self, peak_md: float, summary: Dict[str, Any]) -> None:
        lines = [f"Gradient magnitude peaks at [report.value]{peak_md:.4f}[/report.value] Mahalanobis units"]
        lines.extend(f"[dim]{key}: {value}[/dim]" for key, value in summary.items())
        title = "[bold blue]Radial profile[/bold blue]"
        self.console.print(Panel("\n".join(lines), title=title, border_style=BORDER_STYLE, box=ROUNDED))

    def show_batch_summary(self, results: List[Dict[str, Any]], statistics: Dict[str, Any]) -> None:
        table = Table(title="Batch Summary", border_style=BORDER_STYLE, box=ROUNDED)
        table.add_column("Scenario", style="green", no_wrap=True)
        table.add_column("Status", style="yellow")
        table.add_column("Total loss", justify="right")
        table.add_column("l2 avg", justify="right")
        table.add_column("Detail")

        for result in results:
            name = Path(result["scenario"]).name
            if result["status"] == "completed":
                table.add_row(name, "completed", _fmt(result["total"]), _fmt(result["l2_avg"]), result["output"])
            else:
                table.add_row(name, "[error]failed[/error]", "-", "-", escape(result.get("error", "")))
        self.console.print(table)
        self.console.print(
            f"[dim]{statistics['successful']}/{statistics['total']} succeeded "
            f"({statistics['success_rate']:.0f}%)[/dim]"
        )
