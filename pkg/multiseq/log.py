"""Logging setup for the command-line entry point."""

from __future__ import annotations

import logging
import sys

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def configure_logging(verbosity: int = 0) -> logging.Logger:
    """Attach a single stderr handler to the ``multiseq`` logger.

    ``verbosity`` 0 logs warnings, 1 adds info, 2 or more adds debug output.
    Calling it again replaces the handler instead of stacking a second one.
    """
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:  # noqa: PLR2004
        level = logging.DEBUG

    root = logging.getLogger("multiseq")
    for handler in list(root.handlers):
        if getattr(handler, "_multiseq", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._multiseq = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(level)
    return root
