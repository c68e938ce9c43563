# common/logs.py
from __future__ import annotations

import logging
import sys

from pythonjsonlogger import jsonlogger

ROOT = "nondeg"


def get_logger(name: str) -> logging.Logger:
    """Module logger under the nondeg namespace, e.g. get_logger("construct")."""
    return logging.getLogger(f"{ROOT}.{name}")


def configure_logging(level: str = "INFO", json: bool = False) -> logging.Logger:
    """Install one stderr handler on the nondeg logger (idempotent)."""
    root = logging.getLogger(ROOT)
    for h in list(root.handlers):
        root.removeHandler(h)

    handler = logging.StreamHandler(sys.stderr)
    if json:
        handler.setFormatter(jsonlogger.JsonFormatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))

    root.addHandler(handler)
    root.setLevel(str(level).upper())
    root.propagate = False
    return root
