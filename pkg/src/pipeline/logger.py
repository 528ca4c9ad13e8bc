import logging
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

_CREATED = set()


def _as_level(log_level) -> int:
    if isinstance(log_level, str):
        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level {log_level!r}")
        return level
    return int(log_level)


def get_logger(name: str, log_level=logging.INFO) -> logging.Logger:
    """Create and configure a package logger.

    Records go to stderr; stdout carries the CLI reports.
    """
    logger = logging.getLogger(name)

    if logger.handlers:
        return logger

    level = _as_level(log_level)
    logger.setLevel(level)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))

    logger.addHandler(handler)
    logger.propagate = False
    _CREATED.add(name)

    return logger


def set_log_level(log_level) -> None:
    """Apply a level to every logger handed out by get_logger."""
    level = _as_level(log_level)
    for name in _CREATED:
        logger = logging.getLogger(name)
        logger.setLevel(level)
        for handler in logger.handlers:
            handler.setLevel(level)
