from uavlc.models.scenario import Scenario, VlcParams
from uavlc.models.solution import Association, FeasibilityReport, PhaseMatrix, Solution
from uavlc.models.trace import BlockRecord, RunTrace

__all__ = [
    "Association",
    "BlockRecord",
    "FeasibilityReport",
    "PhaseMatrix",
    "RunTrace",
    "Scenario",
    "Solution",
    "VlcParams",
]
