"""CLI interface components."""

from .commands import cli
from .report_renderer import ReportRenderer


__all__ = ["ReportRenderer", "cli"]
