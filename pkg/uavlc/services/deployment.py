"""
UAV placement by successive convex approximation.

Each pass freezes the angle products cos^k(φ)·g(ϕ)·cos(ϕ) and the RIS
linearization coefficients κ at the current deployment, builds the convex
subproblem over (q, P, ĥ_ij, ĥ_ij^LOS, ĥ_il^LOS) from the minorants g0..g3
and solves it with the barrier method in `cones`. Gains are scaled by a
reference gain so powers stay in watts and gains near 1.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from uavlc.core.decorators import log_block
from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import (
    DomainException,
    InfeasibleChannelException,
    SolverFailureException,
    ZeroPathLossException,
)
from uavlc.models.scenario import Scenario
from uavlc.models.solution import Association, PhaseMatrix
from uavlc.schemas.runs import RunConfig
from uavlc.services.channel import LinkBudget, angle_factor, link_budget
from uavlc.services.cones import (
    ConvexSubproblem,
    HyperbolicConstraint,
    LinearConstraint,
    QuadraticConstraint,
    solve_subproblem,
)
from uavlc.services.power import power_floors, separation_slack, uav_powers

# interior margin of the barrier start
START_SHRINK = 1e-3
SEPARATION_SLACK = 1e-7
MIN_AGGREGATE_GAIN = 1e-12


@dataclass(eq=False)
class ScaState:
    """
    Linearization point of one SCA pass.

    direct_gains / ris_gains are (ĥ_ij^LOS)^(r) and (ĥ_il^LOS)^(r);
    direct_angles / ris_angles the frozen cos^k·g·cos products; kappa[i, l, j]
    the complex κ_ilj; aggregate[i, j] = ĥ_ij^LOS + Σ_l m_il κ_ilj ĥ_il^LOS.
    """
    iterate_positions: np.ndarray
    direct_gains: np.ndarray
    ris_gains: np.ndarray
    direct_angles: np.ndarray
    ris_angles: np.ndarray
    kappa: np.ndarray
    aggregate: np.ndarray
    objective_history: List[float] = field(default_factory=list)

    def coefficient(self, angles: np.ndarray, scenario: Scenario) -> np.ndarray:
        """C = (k+1)A·angles/(2π), so that ĥ = C/d²."""
        vlc = scenario.vlc
        return (vlc.lambertian_order + 1.0) * vlc.pd_area * angles / (2.0 * np.pi)


@dataclass(eq=False)
class ScaResult:
    deployment: np.ndarray
    powers: np.ndarray
    state: ScaState
    iterations: int


# ----------------------------------------------------------------------
# Minorants
# ----------------------------------------------------------------------

def minorant_g0(q_i, q_k, anchor_i, anchor_k) -> float:
    """Tangent of ‖q_i − q_k‖² at the anchors; a global under-estimator."""
    diff = np.asarray(anchor_i, dtype=float) - np.asarray(anchor_k, dtype=float)
    return float(2.0 * diff @ (np.asarray(q_i, dtype=float) - np.asarray(q_k, dtype=float)) - diff @ diff)


def minorant_g1(direct, ris_gains, kappa, anchor_direct, anchor_ris) -> float:
    """
    Tangent of |ĥ_ij^LOS + Σ_l κ_l ĥ_il^LOS|² at the anchor:
    2·Re{conj(a^r)·a} − |a^r|².
    """
    kappa = np.asarray(kappa, dtype=complex)
    anchor = anchor_direct + np.sum(kappa * np.asarray(anchor_ris, dtype=float))
    if abs(anchor) == 0.0:
        raise DomainException("aggregate gain at the linearization point is zero")
    value = direct + np.sum(kappa * np.asarray(ris_gains, dtype=float))
    return float(2.0 * (np.conj(anchor) * value).real - abs(anchor) ** 2)


def _reciprocal_tangent(gain, anchor: float, coefficient: float) -> float:
    if anchor <= 0:
        raise DomainException(f"linearization gain must be > 0, got {anchor}")
    return float(coefficient * (2.0 * anchor - np.asarray(gain, dtype=float)) / anchor ** 2)


def minorant_g2(direct_gain, anchor: float, coefficient: float) -> float:
    """Tangent of C/ĥ_ij^LOS; g2(ĥ) ≥ d_ij² forces ĥ ≤ C/d_ij²."""
    return _reciprocal_tangent(direct_gain, anchor, coefficient)


def minorant_g3(ris_gain, anchor: float, coefficient: float) -> float:
    """Tangent of C/ĥ_il^LOS for the UAV -> RIS hop."""
    return _reciprocal_tangent(ris_gain, anchor, coefficient)


# ----------------------------------------------------------------------
# Linearization state
# ----------------------------------------------------------------------

def compute_kappa(uav: int, ris: int, user: int, deployment, phases: PhaseMatrix, scenario: Scenario) -> complex:
    budget = link_budget(deployment, scenario)
    loss = budget.ur_loss[uav, ris]
    if loss == 0.0:
        raise ZeroPathLossException(f"UAV {uav} cannot see RIS {ris}")
    reflected = np.sum(np.conj(budget.rg[ris, user]) * np.exp(1j * phases.theta[ris]) * budget.ur[uav, ris])
    return complex(reflected / loss)


def _angles(deployment: np.ndarray, scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    uavs = scenario.uav_points(deployment)
    users = scenario.user_points
    ris = scenario.ris_points
    direct_delta = uavs[:, None, :] - users[None, :, :]
    ris_delta = uavs[:, None, :] - ris[None, :, :]
    direct = angle_factor(direct_delta[..., 2], np.linalg.norm(direct_delta, axis=-1), scenario.vlc)
    via_ris = angle_factor(ris_delta[..., 2], np.linalg.norm(ris_delta, axis=-1), scenario.vlc)
    return direct, via_ris


def sca_state(
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
    budget: LinkBudget = None,
    history: List[float] = None,
) -> ScaState:
    budget = budget or link_budget(deployment, scenario)
    reflected = budget.reflected(phases.theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(budget.ur_loss[..., None] > 0, reflected / budget.ur_loss[..., None], 0.0)
    aggregate = budget.los + np.einsum("il,ilj,il->ij", assoc.ris_assoc.astype(float), kappa, budget.ur_loss)
    direct_angles, ris_angles = _angles(deployment, scenario)
    return ScaState(
        iterate_positions=np.array(deployment, dtype=float),
        direct_gains=budget.los,
        ris_gains=budget.ur_loss,
        direct_angles=direct_angles,
        ris_angles=ris_angles,
        kappa=kappa,
        aggregate=aggregate,
        objective_history=list(history or []),
    )


# ----------------------------------------------------------------------
# Subproblem assembly
# ----------------------------------------------------------------------

class _Variables:
    def __init__(self):
        self.names: List[str] = []
        self.start: List[float] = []
        self.index: Dict[str, int] = {}

    def add(self, name: str, start: float) -> int:
        self.index[name] = len(self.names)
        self.names.append(name)
        self.start.append(float(start))
        return self.index[name]

    def unit(self, name: str) -> np.ndarray:
        vector = np.zeros(len(self.names))
        vector[self.index[name]] = 1.0
        return vector


def build_subproblem(
    state: ScaState,
    assoc: Association,
    scenario: Scenario,
) -> Tuple[ConvexSubproblem, np.ndarray, float]:
    """
    Assembles the convex subproblem at `state`. Returns the problem, a
    strictly feasible start and the gain scale g_ref.
    """
    floors = power_floors(scenario)
    anchors = state.iterate_positions
    width, height = scenario.area
    served = assoc.user_assoc.astype(bool) & (floors[None, :] > 0)

    positive = state.direct_gains[served]
    g_ref = float(positive[positive > 0].max()) if np.any(positive > 0) else 1.0
    direct_coef = state.coefficient(state.direct_angles, scenario) / g_ref
    ris_coef = state.coefficient(state.ris_angles, scenario) / g_ref
    direct_ref = state.direct_gains / g_ref
    ris_ref = state.ris_gains / g_ref
    aggregate_ref = state.aggregate / g_ref

    shrink = 1.0 - START_SHRINK
    variables = _Variables()
    for i in range(scenario.uav_count):
        variables.add(f"x{i}", anchors[i, 0])
        variables.add(f"y{i}", anchors[i, 1])

    active = [i for i in range(scenario.uav_count) if served[i].any()]
    pairs = [(i, int(j)) for i in active for j in np.flatnonzero(served[i])]
    links = [
        (i, int(l)) for i in active for l in assoc.ris_of(i) if state.ris_gains[i, l] > 0
    ]

    for i, l in links:
        variables.add(f"r{i}_{l}", shrink * ris_ref[i, l])
    for i, j in pairs:
        if state.direct_gains[i, j] > 0:
            variables.add(f"d{i}_{j}", shrink * direct_ref[i, j])
        if abs(aggregate_ref[i, j]) < MIN_AGGREGATE_GAIN:
            raise InfeasibleChannelException(f"user {j} has zero gain to its UAV {i}")
        variables.add(f"h{i}_{j}", (1.0 - 2.0 * START_SHRINK) * abs(aggregate_ref[i, j]))
    for i in active:
        need = max(
            floors[j] / g_ref / variables.start[variables.index[f"h{i}_{j}"]] for ii, j in pairs if ii == i
        )
        variables.add(f"P{i}", need * (1.0 + START_SHRINK))

    n = len(variables.names)
    constraints = []

    def position(i):
        matrix = np.zeros((2, n))
        matrix[0, variables.index[f"x{i}"]] = 1.0
        matrix[1, variables.index[f"y{i}"]] = 1.0
        return matrix

    # power: P_i·ĥ_ij ≥ A_j
    for i, j in pairs:
        constraints.append(HyperbolicConstraint(
            name=f"power[{i},{j}]",
            first=variables.index[f"P{i}"],
            second=variables.index[f"h{i}_{j}"],
            bound=floors[j] / g_ref,
        ))
        constraints.append(LinearConstraint(
            name=f"gain_floor[{i},{j}]",
            coefficients=-variables.unit(f"h{i}_{j}"),
            bound=-MIN_AGGREGATE_GAIN,
        ))

    # aggregate gain: ĥ_ij² ≤ g1
    for i, j in pairs:
        anchor = aggregate_ref[i, j]
        coefficients = np.zeros(n)
        if state.direct_gains[i, j] > 0:
            coefficients += 2.0 * anchor.real * variables.unit(f"d{i}_{j}")
        for ii, l in links:
            if ii == i:
                weight = 2.0 * (np.conj(anchor) * state.kappa[i, l, j]).real
                coefficients += weight * variables.unit(f"r{i}_{l}")
        matrix = variables.unit(f"h{i}_{j}")[None, :]
        constraints.append(QuadraticConstraint(
            name=f"aggregate[{i},{j}]",
            matrix=matrix,
            offset=np.zeros(1),
            coefficients=coefficients,
            constant=-abs(anchor) ** 2,
        ))

    # direct link geometry: ‖q_i − v_j‖² + H² ≤ g2
    for i, j in pairs:
        if state.direct_gains[i, j] <= 0:
            continue
        anchor, coef = direct_ref[i, j], direct_coef[i, j]
        constraints.append(QuadraticConstraint(
            name=f"direct_geometry[{i},{j}]",
            matrix=position(i),
            offset=-scenario.users[j],
            coefficients=-coef / anchor ** 2 * variables.unit(f"d{i}_{j}"),
            constant=2.0 * coef / anchor - scenario.uav_altitude ** 2,
        ))

    # UAV -> RIS geometry: ‖q_i − a_l‖² + (H − z_R)² ≤ g3
    for i, l in links:
        anchor, coef = ris_ref[i, l], ris_coef[i, l]
        constraints.append(QuadraticConstraint(
            name=f"ris_geometry[{i},{l}]",
            matrix=position(i),
            offset=-scenario.ris_positions[l],
            coefficients=-coef / anchor ** 2 * variables.unit(f"r{i}_{l}"),
            constant=2.0 * coef / anchor - (scenario.uav_altitude - scenario.ris_height) ** 2,
        ))

    # separation: g0(q_i, q_k) ≥ min(d_min², current − slack)
    for i in range(scenario.uav_count):
        for k in range(i + 1, scenario.uav_count):
            diff = anchors[i] - anchors[k]
            current = float(diff @ diff)
            rhs = min(scenario.min_separation ** 2, current - SEPARATION_SLACK)
            coefficients = np.zeros(n)
            coefficients[[variables.index[f"x{i}"], variables.index[f"y{i}"]]] = -2.0 * diff
            coefficients[[variables.index[f"x{k}"], variables.index[f"y{k}"]]] = 2.0 * diff
            constraints.append(LinearConstraint(
                name=f"separation[{i},{k}]", coefficients=coefficients, bound=-rhs - current,
            ))

    # stay inside the area
    for i in range(scenario.uav_count):
        for axis, name in enumerate(("x", "y")):
            limit = (width, height)[axis]
            value = anchors[i, axis]
            unit = variables.unit(f"{name}{i}")
            constraints.append(LinearConstraint(
                name=f"area_low[{name}{i}]", coefficients=-unit,
                bound=-(min(0.0, value) - SEPARATION_SLACK),
            ))
            constraints.append(LinearConstraint(
                name=f"area_high[{name}{i}]", coefficients=unit,
                bound=max(limit, value) + SEPARATION_SLACK,
            ))

    objective = np.zeros(n)
    for i in active:
        objective[variables.index[f"P{i}"]] = 1.0

    problem = ConvexSubproblem(
        variables=tuple(variables.names),
        objective=objective,
        constraints=tuple(constraints),
    )
    return problem, np.array(variables.start), g_ref


# ----------------------------------------------------------------------
# SCA loop
# ----------------------------------------------------------------------

def _positions(problem: ConvexSubproblem, x: np.ndarray, scenario: Scenario) -> np.ndarray:
    deployment = np.array([
        [x[problem.index(f"x{i}")], x[problem.index(f"y{i}")]] for i in range(scenario.uav_count)
    ])
    width, height = scenario.area
    return np.clip(deployment, [0.0, 0.0], [width, height])


def _keeps_links(old: LinkBudget, new: LinkBudget, assoc: Association) -> bool:
    served = assoc.user_assoc.astype(bool)
    lost_direct = served & (old.los > 0) & (new.los == 0)
    linked = assoc.ris_assoc.astype(bool)
    lost_ris = linked & (old.ur_loss > 0) & (new.ur_loss == 0)
    return not (lost_direct.any() or lost_ris.any())


@log_block("deployment block", level=logging.DEBUG)
def optimize_deployment(
    deployment: np.ndarray,
    assoc: Association,
    phases: PhaseMatrix,
    scenario: Scenario,
    config: RunConfig,
) -> ScaResult:
    """
    Runs SCA passes until the relative power change drops below
    config.sca_tol or config.sca_max_iters passes. A pass whose true power
    (phases fixed) is worse, or that breaks separation or drops a served link
    out of the field of view, is rejected and ends the loop.
    """
    current = np.array(deployment, dtype=float).reshape(-1, 2)
    budget = link_budget(current, scenario)
    powers = uav_powers(current, phases, assoc, scenario, budget)
    objective = float(powers.sum())
    history = [objective]
    state = sca_state(current, phases, assoc, scenario, budget, history)
    iterations = 0

    for iteration in range(config.sca_max_iters):
        problem, start, _ = build_subproblem(state, assoc, scenario)
        if not np.any(problem.objective):
            break
        try:
            result = solve_subproblem(problem, start, tol=config.subproblem_tol)
        except SolverFailureException as exc:
            exc.best = current
            raise
        iterations += 1

        candidate = _positions(problem, result.x, scenario)
        candidate_budget = link_budget(candidate, scenario)
        try:
            candidate_powers = uav_powers(candidate, phases, assoc, scenario, candidate_budget)
        except InfeasibleChannelException:
            logger.debug("SCA step rejected, served user lost coverage (iteration=%s)", iteration)
            break
        candidate_objective = float(candidate_powers.sum())

        old_slack = separation_slack(current, scenario)
        new_slack = separation_slack(candidate, scenario)
        separated = not new_slack.size or new_slack.min() >= min(old_slack.min(), 0.0) - 1e-6
        if candidate_objective > objective or not separated or not _keeps_links(budget, candidate_budget, assoc):
            logger.debug(
                "SCA step rejected (iteration=%s, objective=%.6e, candidate=%.6e)",
                iteration, objective, candidate_objective,
            )
            break

        change = (objective - candidate_objective) / max(objective, np.finfo(float).tiny)
        current, budget, powers, objective = candidate, candidate_budget, candidate_powers, candidate_objective
        history.append(objective)
        state = sca_state(current, phases, assoc, scenario, budget, history)
        logger.debug("SCA iteration (iteration=%s, objective=%.6e, change=%.3e)", iteration, objective, change)
        if change < config.sca_tol:
            break

    return ScaResult(deployment=current, powers=powers, state=state, iterations=iterations)
