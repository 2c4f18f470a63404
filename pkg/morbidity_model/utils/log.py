"""Coloured logging setup for the package logger."""

import logging

import colorlog

PACKAGE_LOGGER = "morbidity_model"

_handler = None


def init_logging(level: int = logging.INFO) -> logging.Logger:
    """Attach a single colorlog handler to the package logger (idempotent)."""
    global _handler
    logger = logging.getLogger(PACKAGE_LOGGER)
    if _handler is None:
        _handler = colorlog.StreamHandler()
        _handler.setFormatter(
            colorlog.ColoredFormatter("%(log_color)s%(levelname)s: %(name)s %(message)s")
        )
        logger.addHandler(_handler)
        logger.propagate = False
    _handler.setLevel(level)
    logger.setLevel(level)
    return logger
