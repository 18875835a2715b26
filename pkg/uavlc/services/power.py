"""Power floors, per-UAV required powers and feasibility reports."""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from uavlc.exceptions.app_exceptions import InfeasibleChannelException
from uavlc.models.scenario import Scenario
from uavlc.models.solution import Association, FeasibilityReport, PhaseMatrix, Solution
from uavlc.services.channel import LinkBudget, link_budget


def _rate_floor(scenario: Scenario) -> float:
    vlc = scenario.vlc
    rate_term = (2.0 * np.pi / np.e) * (2.0 ** (2.0 * scenario.rate_requirement) - 1.0)
    return vlc.noise_power * np.sqrt(rate_term) / vlc.responsivity


def power_floors(scenario: Scenario) -> np.ndarray:
    """A_j for every user: the larger of the illumination and rate floors."""
    illumination = scenario.illumination_demands / scenario.vlc.responsivity
    return np.maximum(illumination, _rate_floor(scenario))


def power_floor(user: int, scenario: Scenario) -> float:
    return float(power_floors(scenario)[user])


def powers_from_gains(gains: np.ndarray, user_assoc: np.ndarray, floors: np.ndarray) -> np.ndarray:
    """
    P_i = max over served users of A_j / h_j(q_i); 0 for idle UAVs.

    Raises InfeasibleChannelException when a served user with a non-zero
    floor sees zero gain.
    """
    served = np.asarray(user_assoc, dtype=bool)
    demanding = served & (floors[None, :] > 0)
    dead = demanding & (gains <= 0)
    if dead.any():
        uav, user = np.argwhere(dead)[0]
        raise InfeasibleChannelException(
            f"user {user} has zero channel gain to its UAV {uav}"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(demanding, floors[None, :] / np.where(gains > 0, gains, 1.0), 0.0)
    return ratios.max(axis=1, initial=0.0)


def uav_powers(
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
    budget: Optional[LinkBudget] = None,
) -> np.ndarray:
    budget = budget or link_budget(deployment, scenario)
    gains = budget.gains(phases.theta, assoc.ris_assoc)
    return powers_from_gains(gains, assoc.user_assoc, power_floors(scenario))


def required_power(
    uav: int,
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
) -> float:
    return float(uav_powers(deployment, phases, assoc, scenario)[uav])


def total_power(deployment: np.ndarray, phases: PhaseMatrix, assoc: Association, scenario: Scenario) -> float:
    return float(uav_powers(deployment, phases, assoc, scenario).sum())


def build_solution(deployment: np.ndarray, phases: PhaseMatrix, assoc: Association, scenario: Scenario) -> Solution:
    powers = uav_powers(deployment, phases, assoc, scenario)
    return Solution(deployment=deployment, phases=phases, assoc=assoc, powers=powers)


def separation_slack(deployment: np.ndarray, scenario: Scenario) -> np.ndarray:
    """‖q_i − q_k‖ − d_min for every UAV pair i < k."""
    deployment = np.asarray(deployment, dtype=float).reshape(-1, 2)
    if deployment.shape[0] < 2:
        return np.zeros(0)
    return pdist(deployment) - scenario.min_separation


def check_feasibility(solution: Solution, scenario: Scenario, tolerance: float = 1e-9) -> FeasibilityReport:
    vlc = scenario.vlc
    assoc = solution.assoc
    gains = link_budget(solution.deployment, scenario).gains(solution.phases.theta, assoc.ris_assoc)

    owner = assoc.user_owner
    users = np.arange(scenario.user_count)
    received = vlc.responsivity * solution.powers[owner] * gains[owner, users]

    snr = (np.e / (2.0 * np.pi)) * (received / vlc.noise_power) ** 2
    rate_slack = 0.5 * np.log2(1.0 + snr) - scenario.rate_requirement
    illumination_slack = received - scenario.illumination_demands

    return FeasibilityReport(
        rate_slack=rate_slack,
        illumination_slack=illumination_slack,
        separation_slack=separation_slack(solution.deployment, scenario),
        user_column_sums=assoc.user_assoc.sum(axis=0),
        ris_column_sums=assoc.ris_assoc.sum(axis=0),
        tolerance=tolerance,
    )
