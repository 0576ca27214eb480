import logging
import sys

import structlog
from structlog.typing import Processor

from discountlearn import config

# stdout carries traces, so every log line goes to stderr
_handler_ready = False


def _renderer() -> Processor:
    if config.ENV == "prod":
        return structlog.processors.JSONRenderer()
    return structlog.dev.ConsoleRenderer(event_key="msg", colors=sys.stderr.isatty())


def _processors() -> list[Processor]:
    return [
        structlog.stdlib.filter_by_level,
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.CallsiteParameterAdder(
            [
                structlog.processors.CallsiteParameter.FUNC_NAME,
                structlog.processors.CallsiteParameter.LINENO,
            ]
        ),
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.EventRenamer(to="msg"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        _renderer(),
    ]


def init(level: str | None = None) -> None:
    """
    Route structlog through stdlib logging at `level` (LOG_LEVEL when
    omitted). Runs once on import; later calls only change the level.
    """
    global _handler_ready
    name = (level or config.LOG_LEVEL).upper()
    if _handler_ready:
        logging.getLogger().setLevel(name)
        return
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=name)
    structlog.configure(
        processors=_processors(),
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    _handler_ready = True


init()
