from fastapi import Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import AppException


def failure_envelope(status_code: int, message: str) -> dict:
    return {
        "status": "failure",
        "error": {
            "code": status_code,
            "message": message,
        },
    }


async def app_exception_handler(request: Request, exc: AppException):
    logger.warning(
        "Request failed (route=%s, error=%s, message=%s)",
        request.url.path,
        type(exc).__name__,
        exc.message,
    )
    return JSONResponse(
        status_code=exc.status_code,
        content=failure_envelope(exc.status_code, exc.message),
    )


async def request_validation_handler(request: Request, exc: RequestValidationError):
    """Body validation errors in the same envelope, `field.path: msg` of the first error."""
    first = exc.errors()[0]
    location = ".".join(str(part) for part in first["loc"] if part != "body") or "<root>"
    message = f"{location}: {first['msg']}"
    logger.warning("Request rejected (route=%s, message=%s)", request.url.path, message)
    code = status.HTTP_422_UNPROCESSABLE_ENTITY
    return JSONResponse(status_code=code, content=failure_envelope(code, message))
