# uavlc/core/logging_config.py
import logging
from typing import Optional, Union

from uavlc.core.config import get_settings

LOGGER_NAME = "uavlc"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(LOGGER_NAME)


def configure_logging(level: Optional[Union[str, int]] = None) -> logging.Logger:
    """Attaches the stream handler once and sets the level (Settings.log_level by default)."""
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT))
        logger.addHandler(handler)

    if level is None:
        level = get_settings().log_level
    logger.setLevel(level.upper() if isinstance(level, str) else level)
    return logger


configure_logging()
