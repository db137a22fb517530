#!/usr/bin/env python3
"""
ellipseloss main entry point.

This module provides the command-line interface of ellipseloss.
"""

import sys

from rich.console import Console
from rich.traceback import install

from .cli.commands import cli


# Install rich traceback handler
install(show_locals=False)

console = Console()


def main() -> None:
    """Run the ellipseloss command group."""
    try:
        cli(prog_name="ellipseloss")
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        sys.exit(130)


if __name__ == "__main__":
    main()
