"""
Brute-force verifiers for small instances. They share channel and power
evaluation with the production path, never optimizer code.
"""
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from uavlc.exceptions.app_exceptions import InfeasibleChannelException, TooLargeException, ValidationException
from uavlc.models.scenario import Scenario
from uavlc.models.solution import TWO_PI, Association, PhaseMatrix
from uavlc.services.channel import link_budget
from uavlc.services.power import power_floors, powers_from_gains

MAX_GRID_POINTS = 10 ** 8
MAX_ASSOCIATIONS = 10 ** 6
MAX_LATTICE_POINTS = 10 ** 4
CHUNK = 2 ** 16


@dataclass(frozen=True, eq=False)
class PhaseSearchResult:
    rows: np.ndarray
    objective: float
    points: int


@dataclass(frozen=True, eq=False)
class AssociationSearchResult:
    assoc: Association
    powers: np.ndarray
    candidates: int

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())


@dataclass(frozen=True, eq=False)
class DeploymentSearchResult:
    deployment: np.ndarray
    powers: np.ndarray
    lattice_points: int

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())


def grid_phase_search(
    uav: int,
    users: Sequence[int],
    ris_set: Sequence[int],
    deployment: np.ndarray,
    scenario: Scenario,
    resolution_deg: float = 1.0,
) -> PhaseSearchResult:
    """
    Evaluates max_j −|h_j|²/A_j² on every θ in {0, Δ, …, 2π−Δ}^(|L_i|·M)
    and returns the minimizer (first in lexicographic grid order).
    """
    levels = int(round(360.0 / resolution_deg))
    ris_set = np.asarray(ris_set, dtype=int)
    width = ris_set.size * scenario.ris_elements
    points = levels ** width
    if points > MAX_GRID_POINTS:
        raise TooLargeException(f"phase grid has {points} points, cap is {MAX_GRID_POINTS}")

    floors = power_floors(scenario)
    users = [int(j) for j in users if floors[j] > 0]
    budget = link_budget(deployment, scenario)
    # coefficients[j] · e^{iθ} is the reflected part of user j's channel
    coefficients = np.array([
        (np.conj(budget.rg[ris_set, j]) * budget.ur[uav, ris_set]).ravel() for j in users
    ]).reshape(len(users), width)
    los = budget.los[uav, users]
    weights = 1.0 / floors[users] ** 2
    step = TWO_PI / levels

    best_index, best_value = 0, np.inf
    for start in range(0, points, CHUNK):
        index = np.arange(start, min(start + CHUNK, points))
        theta = np.column_stack(np.unravel_index(index, (levels,) * width)) * step if width else np.zeros((index.size, 0))
        signal = los[None, :] + np.exp(1j * theta) @ coefficients.T
        values = np.max(-weights[None, :] * np.abs(signal) ** 2, axis=1, initial=0.0 if not users else -np.inf)
        chunk_best = int(np.argmin(values))
        if values[chunk_best] < best_value:
            best_index, best_value = int(index[chunk_best]), float(values[chunk_best])

    grid = np.array(np.unravel_index(best_index, (levels,) * width), dtype=float) * step if width else np.zeros(0)
    return PhaseSearchResult(
        rows=grid.reshape(ris_set.size, scenario.ris_elements),
        objective=best_value,
        points=points,
    )


def _aligned_reflection(budget) -> np.ndarray:
    """D×L×U reflected magnitudes when every element adds coherently."""
    return np.einsum("ljm,ilm->ilj", np.abs(budget.rg), np.abs(budget.ur))


def exhaustive_association(
    scenario: Scenario,
    deployment: np.ndarray,
    phases: PhaseMatrix,
    realign: bool = False,
    user_assoc: Optional[np.ndarray] = None,
) -> AssociationSearchResult:
    """
    Enumerates every (user, RIS) association and returns the one with the
    lowest total power (first in enumeration order on ties).

    realign=True scores UAVs serving a single demanding user with coherent
    RIS phases. With user_assoc given only RIS associations are enumerated.
    """
    uav_count = scenario.uav_count
    user_choices = (
        [tuple(np.argmax(user_assoc, axis=0))] if user_assoc is not None
        else product(range(uav_count), repeat=scenario.user_count)
    )
    user_options = 1 if user_assoc is not None else uav_count ** scenario.user_count
    candidates = user_options * uav_count ** scenario.ris_count
    if candidates > MAX_ASSOCIATIONS:
        raise TooLargeException(f"{candidates} associations, cap is {MAX_ASSOCIATIONS}")

    floors = power_floors(scenario)
    budget = link_budget(deployment, scenario)
    reflected = budget.reflected(phases.theta)
    aligned = _aligned_reflection(budget)

    best = None
    for user_owner in user_choices:
        users = np.zeros((uav_count, scenario.user_count), dtype=np.int8)
        users[list(user_owner), np.arange(scenario.user_count)] = 1
        terms = reflected
        if realign:
            single = ((users * (floors > 0)).sum(axis=1) == 1)[:, None, None]
            terms = np.where(single, aligned, reflected)
        for ris_owner in product(range(uav_count), repeat=scenario.ris_count):
            ris = np.zeros((uav_count, scenario.ris_count))
            ris[list(ris_owner), np.arange(scenario.ris_count)] = 1
            gains = np.abs(budget.los + np.einsum("il,ilj->ij", ris, terms))
            try:
                powers = powers_from_gains(gains, users, floors)
            except InfeasibleChannelException:
                continue
            if best is None or powers.sum() < best[2].sum():
                best = (users, ris, powers)

    if best is None:
        raise InfeasibleChannelException("no association gives every served user a positive gain")
    return AssociationSearchResult(
        assoc=Association(best[0], best[1].astype(np.int8)),
        powers=best[2],
        candidates=candidates,
    )


def grid_deployment(
    scenario: Scenario,
    assoc: Association,
    phases: PhaseMatrix,
    step: float,
) -> DeploymentSearchResult:
    """Lattice search over UAV positions (D ≤ 2) respecting the minimum separation."""
    if scenario.uav_count > 2:
        raise TooLargeException("grid deployment supports at most 2 UAVs")
    width, height = scenario.area
    xs = np.arange(0.0, width + 1e-9, step)
    ys = np.arange(0.0, height + 1e-9, step)
    if xs.size * ys.size > MAX_LATTICE_POINTS:
        raise TooLargeException(f"lattice has {xs.size * ys.size} points, cap is {MAX_LATTICE_POINTS}")
    lattice = np.array(list(product(xs, ys)))

    floors = power_floors(scenario)
    budget = link_budget(lattice, scenario)
    per_uav = []
    for uav in range(scenario.uav_count):
        ris_rows = np.tile(assoc.ris_assoc[uav], (lattice.shape[0], 1))
        gains = budget.gains(phases.theta, ris_rows)
        demanding = (assoc.user_assoc[uav] > 0) & (floors > 0)
        with np.errstate(divide="ignore"):
            ratios = np.where(gains[:, demanding] > 0, floors[demanding] / gains[:, demanding], np.inf)
        per_uav.append(ratios.max(axis=1, initial=0.0))

    if scenario.uav_count == 1:
        best = int(np.argmin(per_uav[0]))
        return DeploymentSearchResult(lattice[[best]], np.array([per_uav[0][best]]), lattice.shape[0])

    first, second = per_uav
    best_pair, best_total = None, np.inf
    floor_second = second.min()
    for p in np.argsort(first, kind="stable"):
        if first[p] + floor_second >= best_total:
            break
        apart = np.linalg.norm(lattice - lattice[p], axis=1) >= scenario.min_separation
        totals = np.where(apart, first[p] + second, np.inf)
        q = int(np.argmin(totals))
        if totals[q] < best_total:
            best_pair, best_total = (int(p), q), float(totals[q])

    if best_pair is None:
        raise ValidationException("no lattice pair meets the minimum separation with finite power")
    p, q = best_pair
    return DeploymentSearchResult(lattice[[p, q]], np.array([first[p], second[q]]), lattice.shape[0])
