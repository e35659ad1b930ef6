# This module, and all included code, is made available under the terms of the MIT Licence
#
# Copyright (c) 2024 The polyfact Authors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to
# use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of
# the Software, and to permit persons to whom the Software is furnished to do so,
# subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY, FITNESS
# FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR
# COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER
# IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN
# CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""Console and logging set-up shared by the command line tools.

All library modules log through the standard `logging` module, using a logger
named after the module. Nothing is printed by the library itself: instead the
command line driver calls [`configure_logging`]
[polyfact.helpers.console.configure_logging] once, which attaches a
`rich.logging.RichHandler` to the top-level `polyfact` logger. Tables and
progress bars are written to the shared [`console`]
[polyfact.helpers.console.console], which uses `stderr` so that `stdout`
remains free for machine-readable output (see the `--json` option).
"""

import json
import logging

from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)
"""The shared console used for operator-facing output."""

LOG_FORMAT = "%(message)s"
"""Format used by the rich handler: time and level are added by `rich`."""


class JsonFormatter(logging.Formatter):
    """Formats each record as one JSON object, for machine-readable output.

    The object holds the `level`, `logger` and `message` of the record, and an
    `exception` with the formatted traceback when one is attached.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload = {"level": record.levelname, "logger": record.name, "message": record.getMessage()}
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


def verbosity_to_level(verbosity: int) -> int:
    """Map the count of `-v` flags onto a `logging` level.

    Parameters
    ----------

    verbosity: int
        Zero for the default (warnings only), one for `INFO`, two or more for
        `DEBUG`.
    """
    if verbosity <= 0:
        return logging.WARNING
    if verbosity == 1:
        return logging.INFO
    return logging.DEBUG


def configure_logging(verbosity: int = 0, *, json_mode: bool = False) -> logging.Logger:
    """Attach a single handler to the `polyfact` logger, replacing any handler
    installed by an earlier call.

    Parameters
    ----------

    verbosity: int
        Number of `-v` flags given on the command line.
    json_mode: bool
        When set, log lines are written as plain JSON objects to `stderr`
        rather than through `rich`.

    Returns
    -------

    logging.Logger
        The configured `polyfact` logger.
    """
    logger = logging.getLogger("polyfact")
    logger.setLevel(verbosity_to_level(verbosity))

    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler: logging.Handler
    if json_mode:
        handler = logging.StreamHandler()
        handler.setFormatter(JsonFormatter())
    else:
        handler = RichHandler(console=console, show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))

    logger.addHandler(handler)
    logger.propagate = False
    return logger
