"""
User association (dual decomposition) and RIS association (dual method on
the product-linearized problem, or the greedy placement).

Whatever the method, candidate associations are scored by true total power
and the best one seen, incumbent included, is returned. With
`config.local_polish` on, every method finishes with the same 1-/2-move
neighbourhood search.
"""
import logging
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from uavlc.core.decorators import log_block
from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import (
    InfeasibleChannelException,
    NoCoverageException,
    SolverFailureException,
)
from uavlc.models.scenario import Scenario
from uavlc.models.solution import Association, PhaseMatrix
from uavlc.schemas.runs import RunConfig
from uavlc.services.channel import LinkBudget, link_budget
from uavlc.services.phases import optimize_uav_phases
from uavlc.services.power import power_floors, powers_from_gains

H_TILDE_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class AssociationResult:
    assoc: Association
    phases: PhaseMatrix
    powers: np.ndarray

    @property
    def total_power(self) -> float:
        return float(self.powers.sum())


def _one_hot(owner: np.ndarray, uav_count: int) -> np.ndarray:
    matrix = np.zeros((uav_count, owner.size), dtype=np.int8)
    placed = owner >= 0
    matrix[owner[placed], np.flatnonzero(placed)] = 1
    return matrix


def neighbourhood_search(
    owner: np.ndarray,
    uav_count: int,
    evaluate: Callable[[np.ndarray], float],
) -> Tuple[np.ndarray, float]:
    """
    Best-improvement local search: move one item, or two items, to other
    UAVs while the total power strictly drops.
    """
    best = np.array(owner, dtype=int)
    best_value = evaluate(best)
    while True:
        improved_owner, improved_value = None, best_value
        moves = [(k,) for k in range(best.size)] + list(combinations(range(best.size), 2))
        for items in moves:
            choices = [[u for u in range(uav_count) if u != best[k]] for k in items]
            for targets in product(*choices):
                candidate = best.copy()
                candidate[list(items)] = targets
                value = evaluate(candidate)
                if value < improved_value:
                    improved_owner, improved_value = candidate, value
        if improved_owner is None:
            return best, best_value
        best, best_value = improved_owner, improved_value


# ----------------------------------------------------------------------
# User association
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UserDualState:
    beta: np.ndarray
    step: float
    iteration: int = 1

    @classmethod
    def initial(cls, uav_count: int, user_count: int, step: float) -> "UserDualState":
        return cls(beta=np.full((uav_count, user_count), 1.0 / user_count), step=step)


def user_assoc_step(dual: UserDualState, gains: np.ndarray, floors: np.ndarray) -> np.ndarray:
    """u*_ij = 1 for i = argmin_i β_ij A_j / h_j(q_i), lowest index on ties."""
    covered = gains > 0
    uncovered = np.flatnonzero(~covered.any(axis=0))
    if uncovered.size:
        raise NoCoverageException(f"user {uncovered[0]} has zero gain to every UAV")
    with np.errstate(divide="ignore", invalid="ignore"):
        coefficients = np.where(covered, dual.beta * floors[None, :] / np.where(covered, gains, 1.0), np.inf)
    owner = np.argmin(coefficients, axis=0)
    return _one_hot(owner, gains.shape[0])


def dual_powers(dual: UserDualState, user_assoc: np.ndarray, gains: np.ndarray, floors: np.ndarray) -> np.ndarray:
    """
    Minimizer of the Lagrangian in P: 0 while Σ_j β_ij < 1, otherwise the
    power that satisfies the UAV's users.
    """
    required = powers_from_gains(np.where(gains > 0, gains, np.inf), user_assoc, floors)
    saturated = dual.beta.sum(axis=1) >= 1.0 - 1e-12
    return np.where(saturated, required, 0.0)


def user_beta_update(
    dual: UserDualState,
    user_assoc: np.ndarray,
    powers: np.ndarray,
    gains: np.ndarray,
    floors: np.ndarray,
    step: Optional[float] = None,
) -> UserDualState:
    """
    β ← [β + ρ(A_j u_ij / h_j(q_i) − P_i)]^+ with rows rescaled to sum ≤ 1.
    The subgradient is divided by its largest power term; ρ_t = ρ₀/√t.
    """
    step = dual.step / np.sqrt(dual.iteration) if step is None else step
    served = np.asarray(user_assoc, dtype=bool) & (gains > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(served, floors[None, :] / np.where(gains > 0, gains, 1.0), 0.0)
    subgradient = ratios - np.asarray(powers, dtype=float)[:, None]
    scale = max(float(ratios.max(initial=0.0)), float(np.max(powers, initial=0.0)), np.finfo(float).tiny)
    beta = np.maximum(0.0, dual.beta + step * subgradient / scale)
    sums = beta.sum(axis=1, keepdims=True)
    beta = np.where(sums > 1.0, beta / np.where(sums > 0, sums, 1.0), beta)
    return UserDualState(beta=beta, step=dual.step, iteration=dual.iteration + 1)


@log_block("user association block", level=logging.DEBUG)
def optimize_user_association(
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
    config: RunConfig,
) -> AssociationResult:
    """
    Dual iterations over β with the RIS association and phases of `assoc`
    and `phases` held fixed; returns the lowest-power integer association
    seen (the incoming one included), polished when config.local_polish is on.
    """
    gains = link_budget(deployment, scenario).gains(phases.theta, assoc.ris_assoc)
    floors = power_floors(scenario)
    uav_count = scenario.uav_count

    def evaluate(owner: np.ndarray) -> float:
        try:
            return float(powers_from_gains(gains, _one_hot(owner, uav_count), floors).sum())
        except InfeasibleChannelException:
            return np.inf

    best_owner = assoc.user_owner
    best_value = evaluate(best_owner)
    dual = UserDualState.initial(uav_count, scenario.user_count, config.step_size)
    for _ in range(config.user_dual_iters):
        u = user_assoc_step(dual, gains, floors)
        owner = np.argmax(u, axis=0)
        value = evaluate(owner)
        if value < best_value:
            best_owner, best_value = owner, value
        dual = user_beta_update(dual, u, dual_powers(dual, u, gains, floors), gains, floors)

    if config.local_polish:
        best_owner, best_value = neighbourhood_search(best_owner, uav_count, evaluate)
    new_assoc = assoc.with_user_owner(best_owner)
    powers = powers_from_gains(gains, new_assoc.user_assoc, floors)
    logger.debug("User association (total=%.6e, owners=%s)", best_value, best_owner.tolist())
    return AssociationResult(assoc=new_assoc, phases=phases, powers=powers)


# ----------------------------------------------------------------------
# RIS association: shared candidate scoring
# ----------------------------------------------------------------------

class CandidateEvaluator:
    """
    Scores RIS assignments by true total power with phases re-optimized per
    UAV. Per-UAV results are cached by (UAV, users, RIS set); the incoming
    phase rows always compete with the re-optimized ones.
    """

    def __init__(
        self,
        deployment: np.ndarray,
        assoc: Association,
        phases: PhaseMatrix,
        scenario: Scenario,
        config: RunConfig,
    ):
        self.deployment = np.asarray(deployment, dtype=float)
        self.scenario = scenario
        self.config = config
        self.theta = np.array(phases.theta)
        self.users = [tuple(int(j) for j in assoc.users_of(i)) for i in range(scenario.uav_count)]
        self.budget: LinkBudget = link_budget(self.deployment, scenario)
        self.floors = power_floors(scenario)
        self._cache: Dict[Tuple, Tuple[float, np.ndarray]] = {}

    def _uav_power(self, uav: int, ris_set: Sequence[int], theta_rows: np.ndarray) -> float:
        users = [j for j in self.users[uav] if self.floors[j] > 0]
        if not users:
            return 0.0
        signal = self.budget.los[uav, users].astype(complex)
        if len(ris_set):
            ris = list(ris_set)
            signal = signal + np.einsum(
                "ljm,lm,lm->j",
                np.conj(self.budget.rg[ris][:, users]),
                np.exp(1j * theta_rows),
                self.budget.ur[uav, ris],
            )
        magnitude = np.abs(signal)
        if np.any(magnitude <= 0):
            return np.inf
        return float(np.max(self.floors[users] / magnitude))

    def uav(self, uav: int, ris_set: Tuple[int, ...]) -> Tuple[float, np.ndarray]:
        key = (uav, self.users[uav], ris_set)
        if key not in self._cache:
            incumbent = self.theta[list(ris_set)]
            best_rows, best_power = incumbent, self._uav_power(uav, ris_set, incumbent)
            if ris_set:
                try:
                    rows = optimize_uav_phases(
                        uav, self.users[uav], ris_set, self.deployment, self.scenario, self.config,
                        budget=self.budget, incumbent_rows=incumbent,
                    )
                    power = self._uav_power(uav, ris_set, rows)
                    if power < best_power:
                        best_rows, best_power = rows, power
                except SolverFailureException as exc:
                    logger.warning("Phase SDP failed while scoring RIS candidate (uav=%s, error=%s)", uav, exc.message)
            self._cache[key] = (best_power, best_rows)
        return self._cache[key]

    def total(self, ris_owner: np.ndarray) -> float:
        return float(sum(
            self.uav(i, tuple(int(l) for l in np.flatnonzero(ris_owner == i)))[0]
            for i in range(self.scenario.uav_count)
        ))

    def result(self, ris_owner: np.ndarray, user_assoc: np.ndarray) -> AssociationResult:
        theta = np.array(self.theta)
        powers = np.zeros(self.scenario.uav_count)
        for i in range(self.scenario.uav_count):
            ris_set = tuple(int(l) for l in np.flatnonzero(ris_owner == i))
            powers[i], rows = self.uav(i, ris_set)
            theta[list(ris_set)] = rows
        assoc = Association(user_assoc, _one_hot(np.asarray(ris_owner), self.scenario.uav_count))
        return AssociationResult(assoc=assoc, phases=PhaseMatrix(theta), powers=powers)


# ----------------------------------------------------------------------
# RIS association: coefficients and dual method
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RisCoefficients:
    """
    Expansion of |h_ij^LOS + Σ_l m_il r_ilj|² for binary m:
    c0[i, j] + Σ_l c1[i, l, j] m_il + Σ_{l>v} c2[i, l, v, j] m_il m_iv.
    """
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def reconstruct(self, uav: int, user: int, ris_row) -> float:
        m = np.asarray(ris_row, dtype=float)
        return float(
            self.c0[uav, user]
            + self.c1[uav, :, user] @ m
            + m @ self.c2[uav, :, :, user] @ m
        )


def coefficient_tensor(budget: LinkBudget, theta: np.ndarray) -> RisCoefficients:
    reflected = budget.reflected(theta)
    los = budget.los
    c0 = los ** 2
    c1 = 2.0 * los[:, None, :] * reflected.real + np.abs(reflected) ** 2
    cross = 2.0 * np.einsum("ilj,ivj->ilvj", np.conj(reflected), reflected).real
    lower = np.tril(np.ones((reflected.shape[1],) * 2), k=-1)
    c2 = cross * lower[None, :, :, None]
    return RisCoefficients(c0=c0, c1=c1, c2=c2)


def ris_coefficients(uav: int, user: int, deployment, phases: PhaseMatrix, scenario: Scenario):
    """(C_ij0, C_ijl for every l, C_ijlv for l > v as a strictly lower-triangular L×L matrix)."""
    tensor = coefficient_tensor(link_budget(deployment, scenario), phases.theta)
    return float(tensor.c0[uav, user]), tensor.c1[uav, :, user], tensor.c2[uav, :, :, user]


@dataclass(frozen=True, eq=False)
class RisDualState:
    """
    Multipliers of the linearized RIS problem in normalised units.

    gammas3[i, l, v] holds (Γ1, Γ2, Γ3) for l > v; e_vars[i, l, v] the
    product variables E_ilv.
    """
    tau: np.ndarray
    gamma: np.ndarray
    gammas3: np.ndarray
    e_vars: np.ndarray
    h_tilde: np.ndarray
    step: float
    iteration: int = 1


def ris_dual_step(
    state: RisDualState,
    coefficients: RisCoefficients,
    floors: np.ndarray,
    user_assoc: np.ndarray,
) -> Tuple[RisDualState, np.ndarray]:
    """
    One pass of the dual method: E* by the sign rule, m* by the smallest
    aggregated coefficient per RIS, h̃ by the stationarity condition, P at
    its minimum, then projected subgradient steps. Returns the new state
    and the RIS owner vector of m*.
    """
    u = np.asarray(user_assoc, dtype=float)
    uav_count, ris_count = coefficients.c1.shape[:2]
    lower = np.tril(np.ones((ris_count, ris_count)), k=-1)[None, :, :]
    g1, g2, g3 = state.gammas3[..., 0], state.gammas3[..., 1], state.gammas3[..., 2]

    e_coef = g1 - g2 - g3 + np.einsum("ij,ilvj->ilv", state.gamma, coefficients.c2)
    e_vars = (e_coef > 0).astype(float) * lower

    # pairs with l as the larger index contribute Γ1 − Γ2, as the smaller Γ1 − Γ3
    m_coef = (
        -np.einsum("ij,ilj->il", state.gamma, coefficients.c1)
        + np.sum((g1 - g2) * lower, axis=2)
        + np.sum((g1 - g3) * lower, axis=1)
    )
    owner = np.argmin(m_coef, axis=0)
    m = _one_hot(owner, uav_count).astype(float)

    h_tilde = np.array(state.h_tilde)
    active = state.gamma > 0
    h_tilde[active] = np.cbrt(state.tau[active] * floors[None, :].repeat(uav_count, 0)[active] * u[active] / state.gamma[active])
    h_tilde = np.maximum(h_tilde, H_TILDE_FLOOR)

    demand = floors[None, :] * u / h_tilde
    powers = demand.max(axis=1, initial=0.0)

    quad = (
        coefficients.c0
        + np.einsum("ilj,il->ij", coefficients.c1, m)
        + np.einsum("ilvj,ilv->ij", coefficients.c2, e_vars)
    )
    rho = state.step / np.sqrt(state.iteration)
    tau = np.maximum(0.0, state.tau - rho * (powers[:, None] - demand)) * u
    gamma = np.maximum(0.0, state.gamma - rho * (quad - h_tilde ** 2)) * u

    m_l, m_v = m[:, :, None], m[:, None, :]
    gammas3 = np.stack([
        np.maximum(0.0, g1 - rho * (e_vars - m_l - m_v + 1.0)),
        np.maximum(0.0, g2 - rho * (m_l - e_vars)),
        np.maximum(0.0, g3 - rho * (m_v - e_vars)),
    ], axis=-1) * lower[..., None]

    new_state = RisDualState(
        tau=tau, gamma=gamma, gammas3=gammas3, e_vars=e_vars, h_tilde=h_tilde,
        step=state.step, iteration=state.iteration + 1,
    )
    return new_state, owner


@log_block("RIS association block (dual)", level=logging.DEBUG)
def ris_dual_solve(
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
    config: RunConfig,
) -> AssociationResult:
    evaluator = CandidateEvaluator(deployment, assoc, phases, scenario, config)
    incumbent = assoc.ris_owner
    if scenario.ris_count == 0:
        return evaluator.result(incumbent, assoc.user_assoc)

    budget = evaluator.budget
    served = assoc.user_assoc.astype(bool)
    gains = budget.gains(phases.theta, assoc.ris_assoc)
    g_ref = float(gains[served].max()) if served.any() and gains[served].max() > 0 else 1.0
    powers = powers_from_gains(gains, assoc.user_assoc, evaluator.floors)
    p_ref = max(float(powers.max(initial=0.0)), np.finfo(float).tiny)

    coefficients = coefficient_tensor(budget, phases.theta)
    coefficients = RisCoefficients(
        c0=coefficients.c0 / g_ref ** 2, c1=coefficients.c1 / g_ref ** 2, c2=coefficients.c2 / g_ref ** 2,
    )
    floors = evaluator.floors / (g_ref * p_ref)
    u = assoc.user_assoc.astype(float)
    uav_count, ris_count = scenario.uav_count, scenario.ris_count
    state = RisDualState(
        tau=u.copy(),
        gamma=u.copy(),
        gammas3=np.zeros((uav_count, ris_count, ris_count, 3)),
        e_vars=np.zeros((uav_count, ris_count, ris_count)),
        h_tilde=np.maximum(gains / g_ref, H_TILDE_FLOOR),
        step=config.step_size,
    )

    best_owner, best_value = incumbent, evaluator.total(incumbent)
    for _ in range(config.ris_dual_iters):
        state, owner = ris_dual_step(state, coefficients, floors, assoc.user_assoc)
        value = evaluator.total(owner)
        if value < best_value:
            best_owner, best_value = owner, value

    if config.local_polish:
        best_owner, best_value = neighbourhood_search(best_owner, uav_count, evaluator.total)
    logger.debug("RIS association (method=dual, total=%.6e, owners=%s)", best_value, best_owner.tolist())
    return evaluator.result(best_owner, assoc.user_assoc)


@log_block("RIS association block (greedy)", level=logging.DEBUG)
def ris_greedy(
    deployment: np.ndarray,
    phases: PhaseMatrix,
    assoc: Association,
    scenario: Scenario,
    config: RunConfig,
) -> AssociationResult:
    """
    Starts with no RIS associated and places RIS l = 0..L−1 in turn on the
    UAV that minimizes total power with phases re-optimized.
    """
    evaluator = CandidateEvaluator(deployment, assoc, phases, scenario, config)
    owner = np.full(scenario.ris_count, -1)
    for ris in range(scenario.ris_count):
        best_uav, best_value = 0, np.inf
        for uav in range(scenario.uav_count):
            owner[ris] = uav
            value = evaluator.total(owner)
            if value < best_value:
                best_uav, best_value = uav, value
        owner[ris] = best_uav

    incumbent = assoc.ris_owner
    if evaluator.total(incumbent) <= evaluator.total(owner):
        owner = incumbent
    if config.local_polish:
        owner, _ = neighbourhood_search(owner, scenario.uav_count, evaluator.total)
    logger.debug("RIS association (method=greedy, total=%.6e, owners=%s)", evaluator.total(owner), owner.tolist())
    return evaluator.result(owner, assoc.user_assoc)
