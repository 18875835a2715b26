from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, confloat, conint

from uavlc.core.config import Settings, get_settings
from uavlc.models.solution import Solution
from uavlc.models.trace import RunTrace
from uavlc.schemas.scenario import ScenarioCounts, ScenarioSchema

SEED_MAX = 2 ** 64 - 1


class Scheme(str, Enum):
    SCHEME1_DUAL = "scheme1-dual"
    SCHEME2_GREEDY = "scheme2-greedy"
    NO_RIS = "no-ris"
    INITIAL_ONLY = "initial-only"
    PHASE_ONLY = "phase-only"
    DEPLOYMENT_ONLY = "deployment-only"
    USER_ASSOC_ONLY = "user-assoc-only"
    RIS_ASSOC_ONLY = "ris-assoc-only"


# -------------------------
#  Run configuration
# -------------------------

class RunOptions(BaseModel):
    """
    Per-call overrides of the solver settings (CLI flags, API body).
    Fields left as None fall back to Settings.
    """
    model_config = ConfigDict(extra="forbid")

    outer_tol: Optional[confloat(gt=0)] = None
    max_outer: Optional[conint(ge=1)] = None
    sdp_tol: Optional[confloat(gt=0)] = None
    sdp_max_iters: Optional[conint(ge=1)] = None
    subproblem_tol: Optional[confloat(gt=0)] = None
    sca_tol: Optional[confloat(gt=0)] = None
    sca_max_iters: Optional[conint(ge=1)] = None
    randomization_trials: Optional[conint(ge=1)] = None
    user_dual_iters: Optional[conint(ge=1)] = None
    ris_dual_iters: Optional[conint(ge=1)] = None
    step_size: Optional[confloat(gt=0)] = None
    local_polish: Optional[bool] = None


class RunConfig(BaseModel):
    """Everything one orchestrator run needs besides the scenario."""
    model_config = ConfigDict(frozen=True)

    scheme: Scheme = Scheme.SCHEME1_DUAL
    seed: conint(ge=0, le=SEED_MAX) = 0
    outer_tol: confloat(gt=0) = 1e-4
    max_outer: conint(ge=1) = 30
    sdp_tol: confloat(gt=0) = 1e-8
    sdp_max_iters: conint(ge=1) = 200
    subproblem_tol: confloat(gt=0) = 1e-8
    sca_tol: confloat(gt=0) = 1e-6
    sca_max_iters: conint(ge=1) = 50
    randomization_trials: conint(ge=1) = 200
    user_dual_iters: conint(ge=1) = 100
    ris_dual_iters: conint(ge=1) = 100
    step_size: confloat(gt=0) = 0.1
    local_polish: bool = True

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "RunConfig":
        settings = settings or get_settings()
        values = {
            name: getattr(settings, name)
            for name in RunOptions.model_fields
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


# -------------------------
#  Outputs
# -------------------------

class SolutionOut(BaseModel):
    """Decision blocks of a Solution as plain lists."""
    deployment: List[List[float]]
    phases: List[List[float]]
    user_assoc: List[List[int]]
    ris_assoc: List[List[int]]
    powers: List[float]
    total_power_W: float

    @classmethod
    def from_domain(cls, solution: Solution) -> "SolutionOut":
        return cls(
            deployment=solution.deployment.tolist(),
            phases=solution.phases.theta.tolist(),
            user_assoc=solution.assoc.user_assoc.tolist(),
            ris_assoc=solution.assoc.ris_assoc.tolist(),
            powers=solution.powers.tolist(),
            total_power_W=solution.total_power,
        )


class BlockRecordOut(BaseModel):
    iteration: int
    block: str
    objective_W: float
    accepted: bool


class RunTraceOut(BaseModel):
    """
    Reproducible part of a RunTrace (no wall-clock fields), written to
    solution.json.
    """
    scheme: Scheme
    seed: int
    outer_iters: int
    objectives_W: List[float]
    blocks: List[BlockRecordOut]
    solution: SolutionOut

    @classmethod
    def from_domain(cls, trace: RunTrace) -> "RunTraceOut":
        return cls(
            scheme=trace.scheme,
            seed=trace.seed,
            outer_iters=trace.outer_iters,
            objectives_W=trace.objectives,
            blocks=[
                BlockRecordOut(iteration=b.iteration, block=b.block, objective_W=b.objective, accepted=b.accepted)
                for b in trace.blocks
            ],
            solution=SolutionOut.from_domain(trace.solution),
        )


class RunSummary(BaseModel):
    """
    One summary.csv row, also the data of POST /api/v1/runs.
    """
    scheme: Scheme
    seed: int
    total_power_W: float
    outer_iters: int
    runtime_s: float
    seconds_per_iteration: float
    feasible: bool
    nearest_ris_fraction: Optional[float] = None
    solution: Optional[SolutionOut] = Field(None, description="omitted from CSV rows")


# -------------------------
#  API request / envelopes
# -------------------------

class RunRequest(BaseModel):
    """
    Request body for POST /api/v1/runs.

    Without `scenario` a random scenario is drawn from the base scenario
    using `counts` and `seed`.
    """
    scenario: Optional[ScenarioSchema] = None
    counts: Optional[ScenarioCounts] = None
    scheme: Scheme = Scheme.SCHEME1_DUAL
    seed: conint(ge=0, le=SEED_MAX) = 0
    config: Optional[RunOptions] = None


class SuccessRunResponse(BaseModel):
    status: Literal["success"]
    data: RunSummary


class ErrorInfo(BaseModel):
    code: int
    message: str


class ErrorResponse(BaseModel):
    status: Literal["failure"]
    error: ErrorInfo


class SweepRow(BaseModel):
    """One sweep.csv row; failed cells carry feasible=False and NaN powers."""
    sweep_var: str
    value: float
    scheme: Scheme
    seed: int
    total_power_W: float
    runtime_s: float
    seconds_per_iteration: float = 0.0
    outer_iters: int = 0
    feasible: bool
    nearest_ris_fraction: Optional[float] = None
    error: Optional[str] = None
