"""Logging setup for diffusivity-lab.

Library modules only call ``get_logger(__name__)``. The CLI attaches
handlers once: ``setup_logger`` for the package log and
``setup_metrics_logger`` for the per-cell study metrics.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Mapping

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

ROOT_LOGGER_NAME = "src"
METRICS_LOGGER_NAME = "metrics"

LOG_MAX_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5
METRICS_MAX_BYTES = 50 * 1024 * 1024
METRICS_BACKUPS = 3


def _rotating_handler(log_file: str, max_bytes: int, backups: int) -> RotatingFileHandler:
    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    return RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backups, encoding="utf-8")


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    level: int = logging.INFO,
    log_file: str = "logs/diffusivity_lab.log",
    console: bool = True,
    file_logging: bool = True,
) -> logging.Logger:
    """Attach console and rotating-file handlers to the package logger.

    Every ``src.*`` module logger propagates here. Console output goes to
    stderr so that reports printed by the CLI stay alone on stdout. Python
    warnings (numpy overflow, scipy convergence) are routed into the same
    handlers.

    Args:
        name: Logger name, the package root by default
        level: Logging level for the logger and its handlers
        log_file: Rotating log file
        console: Log to stderr
        file_logging: Log to ``log_file``

    Returns:
        The configured logger

    Example:
        >>> logger = setup_logger(level=logging.DEBUG, file_logging=False)
        >>> logger.info("rate study started")
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.handlers.clear()
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    handlers = []
    if console:
        handlers.append(logging.StreamHandler(sys.stderr))
    if file_logging:
        handlers.append(_rotating_handler(log_file, LOG_MAX_BYTES, LOG_BACKUPS))
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    logging.captureWarnings(True)
    warnings_logger = logging.getLogger("py.warnings")
    warnings_logger.handlers = list(handlers)
    warnings_logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """Logger for a module, normally ``get_logger(__name__)``.

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.debug("substeps per interval: 7")
    """
    return logging.getLogger(name)


def setup_metrics_logger(log_file: str = "logs/metrics.log") -> logging.Logger:
    """File-only logger receiving one ``key=value`` line per study cell.

    Example:
        >>> metrics = setup_metrics_logger("results/rate/metrics.log")
        >>> log_cell_metrics({"N": 1024, "replicate": 3, "runtime_s": 0.84})
    """
    logger = logging.getLogger(METRICS_LOGGER_NAME)
    logger.setLevel(logging.INFO)
    logger.handlers.clear()
    logger.propagate = False
    handler = _rotating_handler(log_file, METRICS_MAX_BYTES, METRICS_BACKUPS)
    handler.setFormatter(logging.Formatter("%(asctime)s | %(message)s", datefmt=DATE_FORMAT))
    logger.addHandler(handler)
    return logger


def log_cell_metrics(record: Mapping[str, Any]) -> None:
    """Write a cell record to the metrics logger, leaving out its error text."""
    line = " ".join(f"{key}={value}" for key, value in record.items() if key != "error")
    logging.getLogger(METRICS_LOGGER_NAME).info(line)
