"""
Логи в стиле "[Seesaw] restart 3/50 → 3.30499".
"""

import logging
import sys

_FORMAT = "[%(name)s] %(message)s"


def get_logger(tag: str) -> logging.Logger:
    return logging.getLogger(tag)


def configure_logging(level: str = "INFO", quiet: bool = False) -> None:
    """Один раз из main.py. Логи в stderr, результаты в stdout."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.WARNING if quiet else level.upper())
