from dataclasses import dataclass, field
from typing import List

from uavlc.models.solution import Solution


@dataclass(frozen=True)
class BlockRecord:
    iteration: int
    block: str
    objective: float
    accepted: bool
    seconds: float


@dataclass
class RunTrace:
    """
    History of one orchestrator run.

    objectives[0] is the initial total power, one entry follows per outer
    pass. iteration_seconds holds wall clock per outer pass.
    """
    scheme: str
    seed: int
    objectives: List[float]
    solution: Solution
    blocks: List[BlockRecord] = field(default_factory=list)
    iteration_seconds: List[float] = field(default_factory=list)
    initial_seconds: float = 0.0

    @property
    def outer_iters(self) -> int:
        return len(self.objectives)

    @property
    def runtime_s(self) -> float:
        return self.initial_seconds + sum(self.iteration_seconds)

    @property
    def seconds_per_iteration(self) -> float:
        if not self.iteration_seconds:
            return 0.0
        return sum(self.iteration_seconds) / len(self.iteration_seconds)
