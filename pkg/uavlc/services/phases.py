"""
RIS phase-shift optimization per UAV.

A UAV serving one user gets the closed-form coherent alignment. A UAV serving
several users gets the semidefinite relaxation of the min-max problem over
the lifted vector z = [e^{-iθ}; 1], solved in `cones`, followed by Gaussian
randomization.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from uavlc.core.decorators import log_block
from uavlc.core.logging_config import logger
from uavlc.exceptions.app_exceptions import DomainException, EmptyRisSetException, SolverFailureException
from uavlc.models.scenario import Scenario
from uavlc.models.solution import Association, PhaseMatrix, wrap_phase
from uavlc.schemas.runs import RunConfig
from uavlc.services.channel import LinkBudget, link_budget, rg_channel, ur_channel
from uavlc.services.cones import SdpStandardForm, solve_sdp
from uavlc.services.power import power_floors


@dataclass(frozen=True, eq=False)
class SdpInstance:
    """
    Min-max phase problem of one UAV.

    lifted[j] = [φ_j; h_j] so that h_j² + tr(Q_j Z) = lifted[j]^H Z lifted[j]
    whenever diag(Z) = 1.
    """
    q_matrices: np.ndarray
    weights: np.ndarray
    los_terms: np.ndarray
    lifted: np.ndarray
    ris_indices: Tuple[int, ...]
    users: Tuple[int, ...]
    elements: int

    @property
    def dimension(self) -> int:
        return int(self.lifted.shape[1])


@dataclass(frozen=True, eq=False)
class PsdSolution:
    z_matrix: np.ndarray
    objective: float
    lower_bound: float


def uav_rng(seed: int, uav: int, users: Sequence[int], ris: Sequence[int]) -> np.random.Generator:
    """Generator keyed by (seed, UAV, its users, its RISs)."""
    entropy = [int(seed), int(uav), len(users), *map(int, users), len(ris), *map(int, ris)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


# ----------------------------------------------------------------------
# Single-user alignment
# ----------------------------------------------------------------------

def align_phases(
    uav: int,
    user: int,
    deployment: np.ndarray,
    ris_set: Sequence[int],
    scenario: Scenario,
    budget: Optional[LinkBudget] = None,
) -> np.ndarray:
    """θ_lm = −(2πd/λ)·m·(ϑ_lj − ϑ_il) mod 2π for every l in ris_set."""
    budget = budget or link_budget(deployment, scenario)
    ris_set = np.asarray(ris_set, dtype=int)
    m = np.arange(scenario.ris_elements)
    spread = budget.rg_cos[ris_set, user] - budget.ur_cos[uav, ris_set]
    return wrap_phase(-scenario.vlc.wavenumber_spacing * spread[:, None] * m[None, :])


# ----------------------------------------------------------------------
# Semidefinite relaxation
# ----------------------------------------------------------------------

def build_phi(uav: int, ris: int, user: int, scenario: Scenario, deployment: np.ndarray) -> np.ndarray:
    """Φ_ilj = diag((h_lj^RG)^H)·h_il^UR."""
    q_i = np.asarray(deployment, dtype=float).reshape(-1, 2)[uav]
    return np.conj(rg_channel(ris, user, scenario).entries) * ur_channel(q_i, ris, scenario).entries


def _lifted_vectors(budget: LinkBudget, uav: int, users: Sequence[int], ris_set: Sequence[int]) -> np.ndarray:
    ris_set = np.asarray(ris_set, dtype=int)
    vectors = []
    for user in users:
        phi = (np.conj(budget.rg[ris_set, user]) * budget.ur[uav, ris_set]).ravel()
        vectors.append(np.concatenate([phi, [budget.los[uav, user]]]))
    return np.array(vectors, dtype=complex)


def build_sdp(
    uav: int,
    users: Sequence[int],
    ris_set: Sequence[int],
    deployment: np.ndarray,
    scenario: Scenario,
    budget: Optional[LinkBudget] = None,
) -> SdpInstance:
    if len(ris_set) == 0:
        raise EmptyRisSetException(f"UAV {uav} has no associated RIS")
    floors = power_floors(scenario)[list(users)]
    if np.any(floors <= 0):
        raise DomainException("users with a zero power floor carry no weight in the phase problem")

    budget = budget or link_budget(deployment, scenario)
    lifted = _lifted_vectors(budget, uav, users, ris_set)
    q_matrices = []
    for v in lifted:
        phi, h = v[:-1], v[-1].real
        q = np.zeros((v.size, v.size), dtype=complex)
        q[:-1, :-1] = np.outer(phi, phi.conj())
        q[:-1, -1] = h * phi
        q[-1, :-1] = h * phi.conj()
        q_matrices.append(q)

    return SdpInstance(
        q_matrices=np.array(q_matrices),
        weights=1.0 / floors ** 2,
        los_terms=lifted[:, -1].real,
        lifted=lifted,
        ris_indices=tuple(int(r) for r in ris_set),
        users=tuple(int(u) for u in users),
        elements=scenario.ris_elements,
    )


def matrix_objective(instance: SdpInstance, z_matrix: np.ndarray) -> float:
    """max_j −w_j·v_j^H Z v_j"""
    quad = np.einsum("jk,kl,jl->j", instance.lifted.conj(), z_matrix, instance.lifted).real
    return float(np.max(-instance.weights * quad))


def vector_objectives(instance: SdpInstance, candidates: np.ndarray) -> np.ndarray:
    """Min-max objective for each row of `candidates` (unit-modulus, last entry 1)."""
    inner = candidates @ instance.lifted.conj().T
    return np.max(-instance.weights[None, :] * np.abs(inner) ** 2, axis=1)


def solve_passive_beamforming(instance: SdpInstance, tol: float = 1e-8, max_iters: int = 200) -> PsdSolution:
    """
    Epigraph form: maximize s subject to w_j v_j^H Z v_j − s − σ_j = 0,
    σ ≥ 0, s ≥ 0, diag(Z) = 1, Z ⪰ 0. Weights are normalised by
    max_j w_j‖v_j‖² before solving.
    """
    n = instance.dimension
    scale_per_user = instance.weights * np.sum(np.abs(instance.lifted) ** 2, axis=1)
    if np.any(scale_per_user == 0):
        # a user with no signal at all pins the objective at 0
        identity = np.eye(n, dtype=complex)
        return PsdSolution(z_matrix=identity, objective=0.0, lower_bound=0.0)

    scale = float(scale_per_user.max())
    users = len(instance.users)
    constraints = []
    for k in range(n):
        unit = np.zeros((n, n), dtype=complex)
        unit[k, k] = 1.0
        constraints.append((unit, 1.0))
    for weight, v in zip(instance.weights / scale, instance.lifted):
        constraints.append((weight * np.outer(v, v.conj()), 0.0))

    coefficients = np.zeros((n + users, 1 + users))
    coefficients[n:, 0] = -1.0
    coefficients[n:, 1:] = -np.eye(users)
    orthant_cost = np.zeros(1 + users)
    orthant_cost[0] = -1.0

    form = SdpStandardForm(
        cost=np.zeros((n, n), dtype=complex),
        equality_constraints=tuple(constraints),
        dimension=n,
        orthant_cost=orthant_cost,
        orthant_coefficients=coefficients,
    )
    result = solve_sdp(form, tol=tol, max_iters=max_iters)
    z_matrix = 0.5 * (result.primal + result.primal.conj().T)
    return PsdSolution(
        z_matrix=z_matrix,
        objective=matrix_objective(instance, z_matrix),
        lower_bound=scale * result.dual_objective,
    )


def randomize_rank_one(
    psd: PsdSolution,
    instance: SdpInstance,
    trials: int,
    rng: np.random.Generator,
    incumbent_rows: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """
    Best unit-modulus candidate among the principal eigenvector of Z, `trials`
    Gaussian draws with covariance Z and, when given, the incumbent phases.
    Returns phase rows (|L_i|×M) and their objective.
    """
    n = instance.dimension
    values, vectors = np.linalg.eigh(psd.z_matrix)
    values = np.clip(values, 0.0, None)

    draws = rng.standard_normal((trials, n, 2))
    noise = (draws[..., 0] + 1j * draws[..., 1]) / np.sqrt(2.0)
    samples = noise @ (vectors * np.sqrt(values)).T

    candidates = [vectors[:, -1][None, :], samples]
    if incumbent_rows is not None:
        z = np.exp(-1j * np.asarray(incumbent_rows, dtype=float).ravel())
        candidates.append(np.concatenate([z, [1.0]])[None, :])
    raw = np.vstack(candidates)

    projected = np.exp(1j * np.angle(raw))
    projected *= np.conj(projected[:, -1:])
    objectives = vector_objectives(instance, projected)
    best = int(np.argmin(objectives))

    z = projected[best, :-1]
    rows = wrap_phase(-np.angle(z)).reshape(len(instance.ris_indices), instance.elements)
    return rows, float(objectives[best])


# ----------------------------------------------------------------------
# Block update
# ----------------------------------------------------------------------

def optimize_uav_phases(
    uav: int,
    users: Sequence[int],
    ris_set: Sequence[int],
    deployment: np.ndarray,
    scenario: Scenario,
    config: RunConfig,
    budget: Optional[LinkBudget] = None,
    incumbent_rows: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Phase rows for one UAV given its users and RISs."""
    ris_set = [int(r) for r in ris_set]
    if incumbent_rows is None:
        incumbent_rows = np.zeros((len(ris_set), scenario.ris_elements))
    if not ris_set:
        return incumbent_rows

    floors = power_floors(scenario)
    demanding = [int(j) for j in users if floors[j] > 0]
    budget = budget or link_budget(deployment, scenario)

    if not demanding:
        return incumbent_rows
    if len(demanding) == 1:
        return align_phases(uav, demanding[0], deployment, ris_set, scenario, budget)

    instance = build_sdp(uav, demanding, ris_set, deployment, scenario, budget)
    psd = solve_passive_beamforming(instance, tol=config.sdp_tol, max_iters=config.sdp_max_iters)
    rng = uav_rng(config.seed, uav, demanding, ris_set)
    rows, objective = randomize_rank_one(psd, instance, config.randomization_trials, rng, incumbent_rows)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(
            "UAV phases (uav=%s, users=%s, ris=%s, relaxation=%.6e, achieved=%.6e)",
            uav, demanding, ris_set, psd.objective, objective,
        )
    return rows


@log_block("phase block", level=logging.DEBUG)
def optimize_phases(
    deployment: np.ndarray,
    assoc: Association,
    scenario: Scenario,
    phases: PhaseMatrix,
    config: RunConfig,
) -> PhaseMatrix:
    """
    Re-optimizes every UAV's RIS rows. A UAV whose SDP fails keeps its
    incoming rows.
    """
    budget = link_budget(deployment, scenario)
    theta = np.array(phases.theta)
    for uav in range(scenario.uav_count):
        ris_set = assoc.ris_of(uav)
        if ris_set.size == 0:
            continue
        try:
            theta[ris_set] = optimize_uav_phases(
                uav, assoc.users_of(uav), ris_set, deployment, scenario, config,
                budget=budget, incumbent_rows=theta[ris_set],
            )
        except SolverFailureException as exc:
            logger.warning("Phase SDP failed, keeping incoming rows (uav=%s, error=%s)", uav, exc.message)
    return PhaseMatrix(theta)
