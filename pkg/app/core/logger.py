"""
Structured Logging Configuration

This module provides structured logging for the toolchain. Loggers are
structlog bound loggers backed by stdlib logging handlers that write to
standard error, so standard output stays reserved for data.
"""

import logging
import sys
from typing import Any, Dict, Optional

import structlog

from app.core.config import settings

structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.KeyValueRenderer(key_order=["event"], sort_keys=True),
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=False,
)


def get_logger(name: str, level: Optional[str] = None) -> Any:
    """
    Get a configured logger instance

    Args:
        name: Logger name (usually __name__)
        level: Log level override

    Returns:
        Structured logger bound to the stdlib logger ``name``
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        log_level = level or settings.LOG_LEVEL
        logger.setLevel(getattr(logging, log_level.upper(), logging.WARNING))

        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        )

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        # Prevent duplicate logs
        logger.propagate = False
    elif level:
        logger.setLevel(getattr(logging, level.upper(), logging.WARNING))

    return structlog.get_logger(name)


class PipelineAuditLogger:
    """Audit trail for dataset generation runs"""

    def __init__(self) -> None:
        self.logger = get_logger("audit")
        self.entries: list[Dict[str, Any]] = []

    def _record(self, event: str, **fields: Any) -> None:
        self.entries.append({"event": event, **fields})
        self.logger.info(event, **fields)

    def log_generation_start(self, theory_id: str, seed: int, max_records: int) -> None:
        """Log generation start event"""
        self._record(
            "generation_started", theory=theory_id, seed=seed, max_records=max_records
        )

    def log_record_skipped(self, theory_id: str, target: str, reason: str) -> None:
        """Log a record that failed self-validation"""
        self._record("record_skipped", theory=theory_id, target=target, reason=reason)

    def log_generation_complete(
        self, theory_id: str, emitted: int, skipped: int, samples: int
    ) -> None:
        """Log generation completion"""
        self._record(
            "generation_completed",
            theory=theory_id,
            emitted=emitted,
            skipped=skipped,
            samples=samples,
        )


def set_log_level(level: str) -> None:
    """Change the level of every logger created through ``get_logger``"""
    numeric = getattr(logging, level.upper(), logging.WARNING)
    for name, existing in logging.root.manager.loggerDict.items():
        if isinstance(existing, logging.Logger) and (name == "audit" or name.startswith("app")):
            existing.setLevel(numeric)
