import os
from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings

BUNDLED_SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "bundled.json"


class Settings(BaseSettings):

    # pool size for sweeps (UAVLC_THREADS)
    threads: int = os.cpu_count() or 1
    log_level: str = "INFO"

    base_scenario: Path = BUNDLED_SCENARIO
    demand_low: float = 1e-5
    demand_high: float = 9e-5

    outer_tol: float = 1e-4
    max_outer: int = 30

    sdp_tol: float = 1e-8
    sdp_max_iters: int = 200
    subproblem_tol: float = 1e-8
    sca_tol: float = 1e-6
    sca_max_iters: int = 50

    randomization_trials: int = 200
    user_dual_iters: int = 100
    ris_dual_iters: int = 100
    step_size: float = 0.1
    # neighbourhood polish of association results, both schemes
    local_polish: bool = True

    sweep_seeds: int = 20

    class Config:
        env_prefix = "UAVLC_"
        env_file = ".env"
        extra = "ignore"


@lru_cache
def get_settings() -> Settings:
    return Settings()
