"""
Logging configuration for the Metropolis-Hastings contraction toolkit.
"""

import logging
import sys
from pathlib import Path
from typing import Optional

from ..config.settings import LOG_FORMAT, LOG_LEVEL, LOG_TO_FILE


def setup_logging(verbose: bool = False, log_file: Optional[Path] = None) -> None:
    """
    Set up logging configuration.

    Args:
        verbose: Enable verbose logging if True
        log_file: Optional log file path (created together with its folder)
    """
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper())
    formatter = logging.Formatter(LOG_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        if isinstance(handler, logging.FileHandler):
            handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file is not None and LOG_TO_FILE:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.getLogger(__name__).debug("Logging configured successfully")


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)
