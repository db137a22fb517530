"""Console and file logging for ellipseloss."""

import logging
from pathlib import Path
from typing import Optional
from typing import Union

from rich.console import Console
from rich.logging import RichHandler


LOGGER_NAME = "ellipseloss"

FILE_FORMAT = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def setup_logging(
    level: Union[str, int] = "INFO", log_file: Optional[Union[str, Path]] = None, console: Optional[Console] = None
) -> logging.Logger:
    """Route the package logger to a rich console handler and, optionally, a DEBUG file handler.

    Calling it again replaces the handlers it installed before.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG)

    numeric_level = logging.getLevelName(level.upper()) if isinstance(level, str) else level
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    c_handler = RichHandler(console=console, show_path=False, rich_tracebacks=True, markup=False)
    c_handler.setLevel(numeric_level)
    logger.addHandler(c_handler)

    if log_file:
        log_path = Path(log_file).expanduser()
        log_path.parent.mkdir(parents=True, exist_ok=True)
        f_handler = logging.FileHandler(log_path, encoding="utf-8")
        f_handler.setLevel(logging.DEBUG)
        f_handler.setFormatter(FILE_FORMAT)
        logger.addHandler(f_handler)

    logger.propagate = False
    logger.debug("Logging configured. Log file: %s, level: %s", log_file or "-", logging.getLevelName(numeric_level))
    return logger
