"""Fwdlearn Logging

Installs the single stream handler used by the command line interface.
Library modules only ever call ``logging.getLogger(__name__)``.

License: MIT
"""

import logging
import sys

__all__ = ["LOG_FORMAT", "configure_logging"]

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | int = "INFO", stream=None) -> logging.Logger:
    """Configure the ``fwdlearn`` logger hierarchy.

    Calling it again replaces the previous handler instead of stacking a new one.

    Args:
        level: Level name (``"DEBUG"``, ``"INFO"``, ...) or number.
        stream: Target stream; defaults to ``sys.stderr``.

    Returns:
        The package root logger.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    root = logging.getLogger("fwdlearn")
    for handler in list(root.handlers):
        if getattr(handler, "_fwdlearn", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._fwdlearn = True
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    return root
