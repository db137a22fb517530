"""Batch evaluation of several scenario files."""

import logging
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import as_completed
from datetime import datetime
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

from rich.console import Console
from rich.progress import BarColumn
from rich.progress import Progress
from rich.progress import SpinnerColumn
from rich.progress import TextColumn
from rich.progress import TimeElapsedColumn

from ..config.config_manager import ConfigManager
from ..config.settings import Settings
from ..exceptions import EllipseLossError
from ..exceptions import ScenarioParseError
from ..exceptions import exit_code_for
from .evaluation import evaluate_doc_metrics
from .evaluation import evaluate_loss
from .evaluation import loss_payload
from .evaluation import metrics_payload
from .evaluation import prepare
from .evaluation import write_rasters
from .file_manager import FileManager
from .scenario import load_scenario


logger = logging.getLogger(__name__)


class BatchProcessor:
    """Evaluates loss and metrics for many scenarios, each into its own output folder."""

    def __init__(
        self,
        config_manager: ConfigManager,
        base_settings: Settings,
        cli_overrides: Optional[Dict[str, Any]] = None,
        console: Optional[Console] = None,
    ):
        self.config_manager = config_manager
        self.base_settings = base_settings
        self.cli_overrides = cli_overrides or {}
        self.console = console or Console()
        self.file_manager = FileManager(base_settings)

    def load_scenario_list(self, file_path: Path) -> List[Path]:
        """Scenario paths from a text file, one per line; ``#`` starts a comment.

        Relative paths resolve against the list file's directory.
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                lines = f.read().splitlines()
        except OSError as e:
            raise ScenarioParseError(f"Failed to read scenario list {file_path}: {e}") from e

        paths = []
        for line in lines:
            line = line.strip()
            if line and not line.startswith("#"):
                path = Path(line).expanduser()
                paths.append(path if path.is_absolute() else Path(file_path).parent / path)
        return paths

    def _folder_names(self, paths: List[Path]) -> List[str]:
        """Slugified stems, suffixed where two scenarios would share a folder."""
        names, seen = [], {}
        for path in paths:
            name = self.file_manager.sanitize_filename(path.stem)
            seen[name] = seen.get(name, 0) + 1
            names.append(name if seen[name] == 1 else f"{name}_{seen[name] - 1}")
        return names

    def process_scenario(self, path: Path, folder_name: str) -> Dict[str, Any]:
        """Evaluate one scenario; failures are reported in the result rather than raised."""
        result: Dict[str, Any] = {"scenario": str(path), "timestamp": datetime.now().isoformat()}
        try:
            doc = load_scenario(path)
            settings = self.config_manager.apply_overrides(self.base_settings, doc.config.overrides())
            settings = self.config_manager.apply_overrides(settings, self.cli_overrides)
            files = FileManager(settings, self.file_manager.base_path)
            folder = files.get_run_folder(folder_name)

            run = prepare(doc)
            loss = evaluate_loss(run, settings)
            metrics = evaluate_doc_metrics(run)
            files.save_report("loss", loss_payload(run), folder)
            files.save_report("metrics", metrics_payload(run), folder)
            if settings.output.emit_rasters:
                write_rasters(run, settings, files, folder)

            result.update(
                status="completed",
                output=str(folder),
                total=loss.total,
                ellipse=loss.ellipse,
                l2_avg=metrics.l2.average,
                box_orfp_avg=metrics.box_orfp.average,
            )
        except EllipseLossError as e:
            logger.debug("Scenario %s failed: %s", path, e)
            result.update(status="failed", error=str(e), error_type=type(e).__name__, exit_code=exit_code_for(e))
        return result

    def process_batch(self, paths: List[Path], max_workers: Optional[int] = None) -> List[Dict[str, Any]]:
        """Evaluate ``paths`` concurrently; results come back in input order."""
        if not paths:
            return []
        max_workers = max_workers or self.base_settings.output.max_workers
        names = self._folder_names(paths)
        results: List[Optional[Dict[str, Any]]] = [None] * len(paths)

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            "[progress.percentage]{task.percentage:>3.0f}%",
            "•",
            TimeElapsedColumn(),
            console=self.console,
        ) as progress:
            description = f"Evaluating {len(paths)} scenarios (max {max_workers} concurrent)"
            task = progress.add_task(description, total=len(paths))
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                futures = {
                    pool.submit(self.process_scenario, path, name): index
                    for index, (path, name) in enumerate(zip(paths, names))
                }
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    progress.advance(task)

        self._save_batch_log(results)
        return results

    def _save_batch_log(self, results: List[Dict[str, Any]]) -> None:
        timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        log_data = {"timestamp": datetime.now().isoformat(), **self.get_batch_statistics(results), "results": results}
        try:
            log_file = self.file_manager.ensure_base_directory() / f"batch_log_{timestamp}.json"
            self.file_manager.write_json(log_file, log_data)
        except EllipseLossError as e:
            self.console.print(f"[yellow]Warning: Failed to save batch log: {e}[/yellow]")

    def get_batch_statistics(self, results: List[Dict[str, Any]]) -> Dict[str, Any]:
        total = len(results)
        successful = len([r for r in results if r.get("status") == "completed"])
        return {
            "total": total,
            "successful": successful,
            "failed": total - successful,
            "success_rate": (successful / total * 100) if total > 0 else 0,
        }
