"""
Structured logging for turnstilesampler.

structlog renders every event as key/value pairs, JSON for pipelines or
plain console lines for terminals. Logs always go to stderr: stdout is
reserved for samples and query answers, which other tools parse.
"""

import logging
import sys
from enum import Enum
from typing import Any, Dict, List

import structlog
from structlog.stdlib import LoggerFactory
from structlog.types import EventDict, Processor

from ..core.errors import ConfigurationError

LOG_FORMATS = ("json", "console")


def _plain_values(_: Any, __: str, event_dict: EventDict) -> EventDict:
    """Enums as their value, seeds in hex."""
    for key, value in event_dict.items():
        if isinstance(value, Enum):
            event_dict[key] = value.value
    seed = event_dict.get("seed")
    if isinstance(seed, int) and not isinstance(seed, bool):
        event_dict["seed"] = f"{seed:#x}"
    return event_dict


def setup_logging(level: str = "WARNING", format_type: str = "console") -> None:
    """
    Configure structlog and the standard library root logger.

    Safe to call more than once; the last call wins.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_type: Output format (json, console)
    """
    if format_type not in LOG_FORMATS:
        raise ConfigurationError(f"unknown log format {format_type!r}")
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        raise ConfigurationError(f"unknown log level {level!r}")

    processors: List[Processor] = [
        structlog.stdlib.filter_by_level,
        structlog.processors.TimeStamper(fmt="ISO"),
        structlog.processors.add_log_level,
        structlog.stdlib.add_logger_name,
        _plain_values,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]
    if format_type == "json":
        processors.append(structlog.processors.JSONRenderer(sort_keys=True))
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=LoggerFactory(),
        cache_logger_on_first_use=False,
    )

    # force: rebind to the current sys.stderr on every call
    logging.basicConfig(
        level=numeric_level,
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Structured logger for ``name`` (typically ``__name__``)."""
    return structlog.get_logger(name)


class LoggerMixin:
    """
    Adds a ``logger`` property bound to the object's log context.

    Subclasses override ``_log_context`` to attach identifying fields
    (a sketch's model, recovery kind and seed, for instance) to every
    event they log.
    """

    def _log_context(self) -> Dict[str, Any]:
        return {}

    @property
    def logger(self) -> structlog.stdlib.BoundLogger:
        cls = self.__class__
        return get_logger(f"{cls.__module__}.{cls.__name__}").bind(**self._log_context())
