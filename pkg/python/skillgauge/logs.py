"""Logging setup for the command line; the library itself only emits."""

from __future__ import annotations

import os
import sys
from typing import Any, TextIO

from loguru import logger

ENV_VAR = "SKILLGAUGE_LOG"
DEFAULT_LEVEL = "warn"

_LEVELS = {
    "error": "ERROR",
    "warn": "WARNING",
    "warning": "WARNING",
    "info": "INFO",
    "debug": "DEBUG",
}

_FORMAT = "<level>{level: <8}</level> {name}:{line} - {message}"


def resolve_level(level: str | None = None) -> str:
    """Map a ``SKILLGAUGE_LOG`` style name to a loguru level name."""
    name = (level or os.environ.get(ENV_VAR) or DEFAULT_LEVEL).strip().lower()
    return _LEVELS.get(name, _LEVELS[DEFAULT_LEVEL])


def configure_logging(level: str | None = None, sink: TextIO | Any = None) -> str:
    """Enable skillgauge logging with a single sink (stderr by default).

    Returns the loguru level name in effect.
    """
    requested = (level or os.environ.get(ENV_VAR) or DEFAULT_LEVEL).strip().lower()
    resolved = resolve_level(requested)

    logger.remove()
    logger.add(sink if sink is not None else sys.stderr, level=resolved, format=_FORMAT)
    logger.enable("skillgauge")

    if requested not in _LEVELS:
        logger.warning(f"Unknown {ENV_VAR} value {requested!r}, using {DEFAULT_LEVEL!r}")
    return resolved
