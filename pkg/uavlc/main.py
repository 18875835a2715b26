# uavlc/main.py
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError

from uavlc import __version__
from uavlc.controller.runs import router as runs_router
from uavlc.exceptions.app_exceptions import AppException
from uavlc.exceptions.handlers import app_exception_handler, request_validation_handler
from uavlc.core.logging_config import logger  # importing applies the logging config


app = FastAPI(
    title="UAV VLC power minimization",
    description="Deployment, RIS phases and association for RIS-assisted VLC UAV networks",
    version=__version__,
)

app.add_exception_handler(AppException, app_exception_handler)
app.add_exception_handler(RequestValidationError, request_validation_handler)


@app.get("/health")
def health_check():
    return {"status": "ok"}


app.include_router(runs_router)
logger.info("API ready (version=%s)", __version__)
