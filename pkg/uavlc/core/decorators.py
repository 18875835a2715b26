# uavlc/core/decorators.py
import logging
import time
from functools import wraps

from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import AppException


def log_block(name: str, level: int = logging.INFO):
    """
    Start / finish logs with the duration in ms around an optimization block
    or an entry point.

    An AppException is logged at WARNING with its message, anything else at
    ERROR with the traceback. Both are re-raised.
    """

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            logger.log(level, "%s - started", name)

            def elapsed() -> float:
                return (time.perf_counter() - start) * 1000

            try:
                result = func(*args, **kwargs)
            except AppException as exc:
                logger.warning("%s - %s after %.2f ms: %s", name, type(exc).__name__, elapsed(), exc.message)
                raise
            except Exception as exc:
                logger.error("%s - failed after %.2f ms: %s", name, elapsed(), exc, exc_info=True)
                raise

            logger.log(level, "%s - finished in %.2f ms", name, elapsed())
            return result

        return wrapper

    return decorator
