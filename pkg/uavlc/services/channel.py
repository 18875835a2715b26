"""
Lambertian line-of-sight gains, ULA array responses and the aggregate
UAV -> user gain (direct link plus RIS-reflected links).

Angles are measured from the vertical axis on every hop, so for a link with
height drop dz and length d both the emission and the incidence cosine equal
dz / d. Direction cosines of the ULA use the x axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from uavlc.exceptions.app_exceptions import DegenerateGeometryException, DomainException

if TYPE_CHECKING:
    from uavlc.models.scenario import Scenario, VlcParams
    from uavlc.models.solution import PhaseMatrix


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryAngles:
    distance: float
    emission_cos: float
    incidence_cos: float
    direction_cosine: float


@dataclass(frozen=True, eq=False)
class ChannelVector:
    """M complex entries sharing one real Lambertian path loss."""
    entries: np.ndarray
    path_loss: float


@dataclass(frozen=True, eq=False)
class LinkBudget:
    """
    Every channel of a deployment, evaluated at once.

    los: D×U direct gains, ur: D×L×M UAV->RIS vectors, rg: L×U×M RIS->user
    vectors. The *_loss arrays hold the real path losses and the *_cos arrays
    the ULA direction cosines.
    """
    los: np.ndarray
    ur: np.ndarray
    rg: np.ndarray
    ur_loss: np.ndarray
    rg_loss: np.ndarray
    ur_cos: np.ndarray
    rg_cos: np.ndarray

    def reflected(self, theta: np.ndarray) -> np.ndarray:
        """D×L×U reflected terms (h_lj^RG)^H diag(e^{iθ_l}) h_il^UR."""
        if self.rg.shape[0] == 0:
            return np.zeros((self.ur.shape[0], 0, self.rg.shape[1]), dtype=complex)
        return np.einsum("ljm,lm,ilm->ilj", np.conj(self.rg), np.exp(1j * theta), self.ur)

    def combined(self, theta: np.ndarray, ris_assoc: np.ndarray) -> np.ndarray:
        """D×U complex sums h_ij^LOS + Σ_l m_il r_ilj."""
        reflected = self.reflected(theta)
        return self.los + np.einsum("il,ilj->ij", np.asarray(ris_assoc, dtype=float), reflected)

    def gains(self, theta: np.ndarray, ris_assoc: np.ndarray) -> np.ndarray:
        return np.abs(self.combined(theta, ris_assoc))


# ----------------------------------------------------------------------
# Scalar building blocks
# ----------------------------------------------------------------------

def lambertian_order(semi_angle: float) -> float:
    if not 0.0 < semi_angle < 90.0:
        raise DomainException(f"semi-angle must lie in (0, 90) degrees, got {semi_angle}")
    return float(-np.log(2.0) / np.log(np.cos(np.radians(semi_angle))))


def concentrator_gain(incidence_angle: float, params: VlcParams) -> float:
    """n²/sin²(Ψ_c) inside the field of view (closed interval), else 0. Degrees."""
    if 0.0 <= incidence_angle <= params.fov:
        return params.concentrator_gain_in_fov
    return 0.0


def link_geometry(tx, rx) -> GeometryAngles:
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    distance = float(np.linalg.norm(tx - rx))
    if distance == 0.0:
        raise DegenerateGeometryException(f"transmitter and receiver coincide at {tx.tolist()}")
    cos = (tx[2] - rx[2]) / distance
    return GeometryAngles(
        distance=distance,
        emission_cos=float(cos),
        incidence_cos=float(cos),
        direction_cosine=float((rx[0] - tx[0]) / distance),
    )


def _lambertian(dz: np.ndarray, distance: np.ndarray, params: VlcParams) -> np.ndarray:
    """Vectorised LOS gain for height drops dz over link lengths distance."""
    dz = np.asarray(dz, dtype=float)
    distance = np.asarray(distance, dtype=float)
    k = params.lambertian_order
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(distance > 0, dz / distance, 0.0)
        angle = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        visible = (dz > 0) & (angle <= params.fov)
        gain = (
            (k + 1.0) * params.pd_area / (2.0 * np.pi * distance ** 2)
            * np.power(np.clip(cos, 0.0, 1.0), k)
            * params.concentrator_gain_in_fov
            * cos
        )
    return np.where(visible, gain, 0.0)


def angle_factor(dz, distance, params: VlcParams) -> np.ndarray:
    """cos^k(φ)·g(ϕ)·cos(ϕ), the part of the LOS gain that depends on angles only."""
    return _lambertian(dz, distance, params) * 2.0 * np.pi * np.asarray(distance, dtype=float) ** 2 / (
        (params.lambertian_order + 1.0) * params.pd_area
    )


def los_gain(tx, rx, params: VlcParams) -> float:
    geometry = link_geometry(tx, rx)
    dz = float(np.asarray(tx, dtype=float)[2] - np.asarray(rx, dtype=float)[2])
    return float(_lambertian(dz, geometry.distance, params))


def array_response(direction_cosine: float, elements: int, spacing: float, wavelength: float) -> np.ndarray:
    m = np.arange(elements)
    return np.exp(-1j * 2.0 * np.pi / wavelength * spacing * m * direction_cosine)


def _steering(direction_cosine: np.ndarray, elements: int, vlc: VlcParams) -> np.ndarray:
    m = np.arange(elements)
    return np.exp(-1j * vlc.wavenumber_spacing * np.asarray(direction_cosine)[..., None] * m)


# ----------------------------------------------------------------------
# Per-link channels
# ----------------------------------------------------------------------

def ur_channel(q_i, ris: int, scenario: Scenario) -> ChannelVector:
    uav = np.array([q_i[0], q_i[1], scenario.uav_altitude], dtype=float)
    target = scenario.ris_points[ris]
    geometry = link_geometry(uav, target)
    loss = los_gain(uav, target, scenario.vlc)
    entries = loss * array_response(
        geometry.direction_cosine, scenario.ris_elements,
        scenario.vlc.element_spacing, scenario.vlc.carrier_wavelength,
    )
    return ChannelVector(entries=entries, path_loss=loss)


def rg_channel(ris: int, user: int, scenario: Scenario) -> ChannelVector:
    source = scenario.ris_points[ris]
    target = scenario.user_points[user]
    geometry = link_geometry(source, target)
    loss = los_gain(source, target, scenario.vlc)
    entries = loss * array_response(
        geometry.direction_cosine, scenario.ris_elements,
        scenario.vlc.element_spacing, scenario.vlc.carrier_wavelength,
    )
    return ChannelVector(entries=entries, path_loss=loss)


def aggregate_gain(q_i, phases: PhaseMatrix, ris_row, user: int, scenario: Scenario) -> float:
    uav = np.array([q_i[0], q_i[1], scenario.uav_altitude], dtype=float)
    total = complex(los_gain(uav, scenario.user_points[user], scenario.vlc))
    for ris in np.flatnonzero(np.asarray(ris_row)):
        rg = rg_channel(ris, user, scenario).entries
        ur = ur_channel(q_i, ris, scenario).entries
        total += np.sum(np.conj(rg) * np.exp(1j * phases.theta[ris]) * ur)
    return float(abs(total))


# ----------------------------------------------------------------------
# Vectorised evaluation for whole deployments
# ----------------------------------------------------------------------

def _pairwise(tx: np.ndarray, rx: np.ndarray):
    delta = rx[None, :, :] - tx[:, None, :]
    distance = np.linalg.norm(delta, axis=-1)
    if np.any(distance == 0.0):
        raise DegenerateGeometryException("a link has zero length")
    return -delta[..., 2], distance, delta[..., 0] / distance


def link_budget(deployment: np.ndarray, scenario: Scenario) -> LinkBudget:
    vlc = scenario.vlc
    uavs = scenario.uav_points(deployment)
    users = scenario.user_points
    ris = scenario.ris_points

    dz, distance, _ = _pairwise(uavs, users)
    los = _lambertian(dz, distance, vlc)

    dz, distance, ur_cos = _pairwise(uavs, ris)
    ur_loss = _lambertian(dz, distance, vlc)
    ur = ur_loss[..., None] * _steering(ur_cos, scenario.ris_elements, vlc)

    dz, distance, rg_cos = _pairwise(ris, users)
    rg_loss = _lambertian(dz, distance, vlc)
    rg = rg_loss[..., None] * _steering(rg_cos, scenario.ris_elements, vlc)

    return LinkBudget(los=los, ur=ur, rg=rg, ur_loss=ur_loss, rg_loss=rg_loss, ur_cos=ur_cos, rg_cos=rg_cos)


def gain_matrix(deployment: np.ndarray, phases: PhaseMatrix, ris_assoc: np.ndarray, scenario: Scenario) -> np.ndarray:
    """D×U aggregate gains h_j(q_i) for the given phases and RIS association."""
    return link_budget(deployment, scenario).gains(phases.theta, ris_assoc)
