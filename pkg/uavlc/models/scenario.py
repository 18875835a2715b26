from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from uavlc.exceptions.app_exceptions import DomainException, ValidationException
from uavlc.services.channel import lambertian_order


def _frozen(values, shape_tail: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape_tail is not None:
        arr = arr.reshape(-1, shape_tail)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VlcParams:
    """Optical front-end constants. Angles in degrees, lengths in meters."""
    semi_angle_half_power: float
    pd_area: float
    fov: float
    refractive_index: float
    responsivity: float
    noise_power: float
    carrier_wavelength: float
    element_spacing: float
    lambertian_order: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.fov <= 90.0:
            raise ValidationException(f"fov must lie in (0, 90] degrees, got {self.fov}")
        for name in ("pd_area", "responsivity", "noise_power", "refractive_index",
                     "carrier_wavelength", "element_spacing"):
            if getattr(self, name) <= 0:
                raise ValidationException(f"{name} must be > 0, got {getattr(self, name)}")
        try:
            k = lambertian_order(self.semi_angle_half_power)
        except DomainException as exc:
            raise ValidationException(
                f"semi_angle_half_power must lie in (0, 90) degrees: {exc.message}"
            ) from exc
        object.__setattr__(self, "lambertian_order", k)

    @property
    def concentrator_gain_in_fov(self) -> float:
        return self.refractive_index ** 2 / np.sin(np.radians(self.fov)) ** 2

    @property
    def wavenumber_spacing(self) -> float:
        # 2*pi*d/lambda, the per-element phase step for unit direction cosine
        return 2.0 * np.pi * self.element_spacing / self.carrier_wavelength


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    One problem instance: UAV count and altitude, ground users, RISs and
    the communication / illumination requirements.

    users and ris_positions are (count, 2) arrays of ground-plane coordinates.
    """
    uav_count: int
    uav_altitude: float
    users: np.ndarray
    ris_positions: np.ndarray
    ris_height: float
    ris_elements: int
    area: Tuple[float, float]
    min_separation: float
    rate_requirement: float
    illumination_demands: np.ndarray
    vlc: VlcParams

    def __post_init__(self):
        object.__setattr__(self, "users", _frozen(self.users, 2))
        object.__setattr__(self, "ris_positions", _frozen(self.ris_positions, 2))
        object.__setattr__(self, "illumination_demands", _frozen(self.illumination_demands).ravel())
        object.__setattr__(self, "area", (float(self.area[0]), float(self.area[1])))
        self._validate()

    def _validate(self) -> None:
        if self.uav_count < 1:
            raise ValidationException("uav_count must be >= 1 (D >= 1)")
        if self.ris_elements < 1:
            raise ValidationException("ris_elements must be >= 1 (M >= 1)")
        if self.user_count < 1:
            raise ValidationException("at least one ground user is required")
        width, height = self.area
        if width <= 0 or height <= 0:
            raise ValidationException("area sides must be > 0")
        for name, points in (("users", self.users), ("ris_positions", self.ris_positions)):
            if points.size and (
                np.any(points < 0) or np.any(points[:, 0] > width) or np.any(points[:, 1] > height)
            ):
                raise ValidationException(f"{name} must lie inside the area")
        if not 0.0 < self.ris_height < self.uav_altitude:
            raise ValidationException("ris_height must satisfy 0 < z_R < H")
        if self.min_separation < 0:
            raise ValidationException("min_separation must be >= 0")
        if self.rate_requirement < 0:
            raise ValidationException("rate_requirement must be >= 0")
        if self.illumination_demands.shape != (self.user_count,):
            raise ValidationException("illumination_demands needs one entry per user")
        if np.any(self.illumination_demands < 0):
            raise ValidationException("illumination_demands must be >= 0")

    @property
    def user_count(self) -> int:
        return int(self.users.shape[0])

    @property
    def ris_count(self) -> int:
        return int(self.ris_positions.shape[0])

    @property
    def user_points(self) -> np.ndarray:
        return np.column_stack([self.users, np.zeros(self.user_count)])

    @property
    def ris_points(self) -> np.ndarray:
        return np.column_stack([self.ris_positions, np.full(self.ris_count, self.ris_height)])

    def uav_points(self, deployment: np.ndarray) -> np.ndarray:
        deployment = np.asarray(deployment, dtype=float).reshape(-1, 2)
        return np.column_stack([deployment, np.full(deployment.shape[0], self.uav_altitude)])

    def without_ris(self) -> "Scenario":
        return replace(self, ris_positions=np.zeros((0, 2)))

    def with_changes(self, **changes) -> "Scenario":
        return replace(self, **changes)
