"""
Alternating optimization of phases, deployment, user association and RIS
association, with a per-block guard that keeps total power non-increasing.
"""
import time
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from uavlc.core.decorators import log_block
from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import (
    InfeasibleChannelException,
    InfeasibleSubproblemException,
    NoCoverageException,
    SolverFailureException,
)
from uavlc.models.scenario import Scenario
from uavlc.models.solution import Association, PhaseMatrix, Solution
from uavlc.models.trace import BlockRecord, RunTrace
from uavlc.schemas.runs import RunConfig, RunSummary, Scheme, SolutionOut
from uavlc.services.association import optimize_user_association, ris_dual_solve, ris_greedy
from uavlc.services.deployment import optimize_deployment
from uavlc.services.phases import optimize_phases
from uavlc.services.power import build_solution, check_feasibility

INIT_ATTEMPTS = 10
SEPARATION_PASSES = 200
FEASIBILITY_TOLERANCE = 1e-6

Block = Callable[[Solution, Scenario, RunConfig], Solution]


# -------------------------
#  Blocks
# -------------------------

def _phase_block(solution: Solution, scenario: Scenario, config: RunConfig) -> Solution:
    phases = optimize_phases(solution.deployment, solution.assoc, scenario, solution.phases, config)
    return build_solution(solution.deployment, phases, solution.assoc, scenario)


def _deployment_block(solution: Solution, scenario: Scenario, config: RunConfig) -> Solution:
    try:
        result = optimize_deployment(solution.deployment, solution.assoc, solution.phases, scenario, config)
    except InfeasibleSubproblemException as exc:
        logger.warning("Deployment subproblem rejected its start, keeping positions (constraint=%s)", exc.constraint)
        return solution
    return Solution(result.deployment, solution.phases, solution.assoc, result.powers)


def _user_block(solution: Solution, scenario: Scenario, config: RunConfig) -> Solution:
    result = optimize_user_association(solution.deployment, solution.phases, solution.assoc, scenario, config)
    return Solution(solution.deployment, result.phases, result.assoc, result.powers)


def _ris_block(method) -> Block:
    def block(solution: Solution, scenario: Scenario, config: RunConfig) -> Solution:
        if scenario.ris_count == 0:
            return solution
        result = method(solution.deployment, solution.phases, solution.assoc, scenario, config)
        return Solution(solution.deployment, result.phases, result.assoc, result.powers)
    return block


BLOCKS: Dict[str, Block] = {
    "phases": _phase_block,
    "deployment": _deployment_block,
    "user_assoc": _user_block,
    "ris_dual": _ris_block(ris_dual_solve),
    "ris_greedy": _ris_block(ris_greedy),
}

SCHEME_BLOCKS: Dict[Scheme, Tuple[str, ...]] = {
    Scheme.SCHEME1_DUAL: ("phases", "deployment", "user_assoc", "ris_dual"),
    Scheme.SCHEME2_GREEDY: ("phases", "deployment", "user_assoc", "ris_greedy"),
    Scheme.NO_RIS: ("deployment", "user_assoc"),
    Scheme.INITIAL_ONLY: (),
    Scheme.PHASE_ONLY: ("phases",),
    Scheme.DEPLOYMENT_ONLY: ("deployment",),
    Scheme.USER_ASSOC_ONLY: ("user_assoc",),
    Scheme.RIS_ASSOC_ONLY: ("ris_dual",),
}


# -------------------------
#  Initialization
# -------------------------

def _separate(deployment: np.ndarray, scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Pushes close UAV pairs apart symmetrically until d_min holds, clipped to the area."""
    upper = np.array(scenario.area)
    target = scenario.min_separation * (1.0 + 1e-6)
    for _ in range(SEPARATION_PASSES):
        if deployment.shape[0] < 2 or pdist(deployment).min() >= target:
            break
        distances = squareform(pdist(deployment))
        for i, k in zip(*np.triu_indices(deployment.shape[0], k=1)):
            if distances[i, k] >= target:
                continue
            direction = deployment[k] - deployment[i]
            norm = np.linalg.norm(direction)
            if norm == 0:
                direction = rng.normal(size=2)
                norm = np.linalg.norm(direction)
            shift = 0.5 * (target - distances[i, k]) * direction / norm
            deployment[i] = np.clip(deployment[i] - shift, 0.0, upper)
            deployment[k] = np.clip(deployment[k] + shift, 0.0, upper)
            distances = squareform(pdist(deployment))
    return deployment


def initial_deployment(user_owner: np.ndarray, scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """UAVs at the centroid of their users; idle UAVs uniformly in the area."""
    deployment = rng.uniform(0.0, 1.0, size=(scenario.uav_count, 2)) * np.array(scenario.area)
    for uav in range(scenario.uav_count):
        members = scenario.users[user_owner == uav]
        if members.size:
            deployment[uav] = members.mean(axis=0)
    return _separate(deployment, scenario, rng)


def initialize(scenario: Scenario, seed: int) -> Solution:
    """
    Zero phases, uniformly random user/RIS owners and centroid deployment.
    Draws that leave a user without gain are redrawn.
    """
    root = np.random.SeedSequence(seed)
    for attempt in range(INIT_ATTEMPTS):
        user_rng, ris_rng, deployment_rng = (np.random.default_rng(s) for s in root.spawn(3))
        user_owner = user_rng.integers(scenario.uav_count, size=scenario.user_count)
        ris_owner = ris_rng.integers(scenario.uav_count, size=scenario.ris_count)
        assoc = Association.from_owners(user_owner, ris_owner, scenario.uav_count)
        deployment = initial_deployment(user_owner, scenario, deployment_rng)
        phases = PhaseMatrix.zeros(scenario.ris_count, scenario.ris_elements)
        try:
            return build_solution(deployment, phases, assoc, scenario)
        except InfeasibleChannelException as exc:
            logger.debug("Initial draw rejected (attempt=%s, reason=%s)", attempt, exc.message)
    raise NoCoverageException(f"no covering initial solution after {INIT_ATTEMPTS} draws")


# -------------------------
#  Outer loop
# -------------------------

@log_block("orchestrator run")
def run(scenario: Scenario, config: RunConfig, initial: Optional[Solution] = None) -> RunTrace:
    """
    Runs the scheme's blocks in order until the relative change of total
    power over one pass is below config.outer_tol or config.max_outer
    passes are done. A block result is kept only if total power does not
    increase. A SolverFailureException leaves with `.solution` set to the
    last accepted Solution.
    """
    scenario = run_scenario(scenario, config.scheme)

    started = time.perf_counter()
    solution = initial if initial is not None else initialize(scenario, config.seed)
    trace = RunTrace(
        scheme=config.scheme.value,
        seed=config.seed,
        objectives=[solution.total_power],
        solution=solution,
        initial_seconds=time.perf_counter() - started,
    )
    blocks = SCHEME_BLOCKS[config.scheme]
    logger.info("Starting run (scheme=%s, seed=%s, initial=%.6e)", config.scheme.value, config.seed, solution.total_power)
    if not blocks:
        return trace

    for iteration in range(1, config.max_outer + 1):
        pass_started = time.perf_counter()
        previous = solution.total_power
        for name in blocks:
            block_started = time.perf_counter()
            try:
                candidate = BLOCKS[name](solution, scenario, config)
            except SolverFailureException as exc:
                exc.solution = solution
                raise
            accepted = candidate.total_power <= solution.total_power
            if accepted:
                solution = candidate
            trace.blocks.append(BlockRecord(
                iteration=iteration,
                block=name,
                objective=solution.total_power,
                accepted=accepted,
                seconds=time.perf_counter() - block_started,
            ))
            logger.debug(
                "Block done (iteration=%s, block=%s, accepted=%s, candidate=%.6e)",
                iteration, name, accepted, candidate.total_power,
            )

        trace.iteration_seconds.append(time.perf_counter() - pass_started)
        trace.objectives.append(solution.total_power)
        trace.solution = solution
        change = (previous - solution.total_power) / max(previous, np.finfo(float).tiny)
        logger.info("Outer pass (iteration=%s, objective=%.6e, change=%.3e)", iteration, solution.total_power, change)
        if change < config.outer_tol:
            break

    return trace


def nearest_uav_fraction(solution: Solution, scenario: Scenario) -> Optional[float]:
    """Share of RISs associated with their geometrically closest UAV; None without RISs."""
    if scenario.ris_count == 0:
        return None
    nearest = np.argmin(cdist(solution.deployment, scenario.ris_positions), axis=0)
    return float(np.mean(nearest == solution.assoc.ris_owner))


def run_scenario(scenario: Scenario, scheme: Scheme) -> Scenario:
    """The scenario a scheme actually optimizes over."""
    return scenario.without_ris() if scheme == Scheme.NO_RIS else scenario


def summarize(trace: RunTrace, scenario: Scenario, include_solution: bool = False) -> RunSummary:
    scheme = Scheme(trace.scheme)
    effective = run_scenario(scenario, scheme)
    report = check_feasibility(trace.solution, effective, tolerance=FEASIBILITY_TOLERANCE)
    return RunSummary(
        scheme=scheme,
        seed=trace.seed,
        total_power_W=trace.solution.total_power,
        outer_iters=trace.outer_iters,
        runtime_s=trace.runtime_s,
        seconds_per_iteration=trace.seconds_per_iteration,
        feasible=report.feasible,
        nearest_ris_fraction=nearest_uav_fraction(trace.solution, effective),
        solution=SolutionOut.from_domain(trace.solution) if include_solution else None,
    )
