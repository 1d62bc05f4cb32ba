"""Logging utilities for QuaterGCN."""

import logging
import sys
from pathlib import Path
from typing import List, Optional

import structlog
from structlog.contextvars import bind_contextvars, clear_contextvars, merge_contextvars
from structlog.dev import ConsoleRenderer
from structlog.processors import JSONRenderer, TimeStamper, add_log_level


def configure_logging(
    log_level: str = "info",
    log_format: str = "json",
    log_outputs: Optional[List[str]] = None,
    log_file: Optional[str] = None,
) -> None:
    """Configure structured logging for the library and the CLI.

    Log lines go to stderr so that reports and tables printed on stdout
    stay machine-readable.
    """
    if log_outputs is None:
        log_outputs = ["console"]

    level = getattr(logging, log_level.upper())
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level, force=True)

    processors = [
        merge_contextvars,
        add_log_level,
        TimeStamper(fmt="ISO"),
    ]
    if log_format.lower() == "json":
        processors.append(JSONRenderer(sort_keys=True))
    else:
        processors.append(ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        context_class=dict,
        cache_logger_on_first_use=False,
    )

    if "file" in log_outputs and log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setLevel(level)
        logging.getLogger().addHandler(file_handler)


def get_logger(name: Optional[str] = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


def bind_run_context(**kwargs) -> None:
    """Attach key/value context (seed, fold, task) to every following log line."""
    bind_contextvars(**kwargs)


def clear_run_context() -> None:
    """Drop the context bound by :func:`bind_run_context`."""
    clear_contextvars()
