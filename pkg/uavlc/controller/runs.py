# uavlc/controller/runs.py
from fastapi import APIRouter, status

from uavlc.core.decorators import log_block
from uavlc.core.logging_config import logger
from uavlc.repositories.scenarios import random_scenario
from uavlc.schemas.runs import ErrorResponse, RunConfig, RunRequest, SuccessRunResponse
from uavlc.services.orchestrator import run, summarize

router = APIRouter(prefix="/api/v1/runs", tags=["runs"])


# -------------------------
# RUN ONE SCHEME
# -------------------------
@router.post(
    "/",
    response_model=SuccessRunResponse,
    status_code=status.HTTP_200_OK,
    responses={
        status.HTTP_422_UNPROCESSABLE_ENTITY: {"model": ErrorResponse},
        status.HTTP_500_INTERNAL_SERVER_ERROR: {"model": ErrorResponse},
    },
)
@log_block("run_endpoint")
def create_run(request: RunRequest):
    """
    Runs one scheme on the posted scenario, or on a random drop of the base
    scenario when none is posted. AppExceptions reach the global handler.
    """
    if request.scenario is not None:
        scenario = request.scenario.to_domain()
    else:
        scenario = random_scenario(request.seed, request.counts)

    overrides = request.config.model_dump() if request.config else {}
    config = RunConfig.from_settings(scheme=request.scheme, seed=request.seed, **overrides)

    logger.info(
        "Running scheme (scheme=%s, seed=%s, uavs=%s, users=%s, ris=%s, route=%s)",
        config.scheme.value,
        config.seed,
        scenario.uav_count,
        scenario.user_count,
        scenario.ris_count,
        "/api/v1/runs/",
    )
    summary = summarize(run(scenario, config), scenario, include_solution=True)
    logger.info(
        "Run finished (scheme=%s, seed=%s, total_power_W=%.6e, feasible=%s)",
        summary.scheme.value,
        summary.seed,
        summary.total_power_W,
        summary.feasible,
    )

    return SuccessRunResponse(status="success", data=summary)
