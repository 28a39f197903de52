"""Logging setup: diagnostics go to standard error, results go to files/stdout."""

from __future__ import annotations

import logging
import sys

from src.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    root = logging.getLogger("src")
    root.setLevel((level or settings.log_level).upper())
    for handler in root.handlers:
        if getattr(handler, "_fuelshock", False):
            handler.stream = sys.stderr
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._fuelshock = True  # type: ignore[attr-defined]
    root.addHandler(handler)
