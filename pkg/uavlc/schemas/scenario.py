from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, conint

from uavlc.models.scenario import Scenario, VlcParams


# -------------------------
#  Scenario file
# -------------------------

class VlcParamsSchema(BaseModel):
    """
    Optical constants of the scenario file.

    Angles in degrees, lengths in meters. element_spacing defaults to half
    the carrier wavelength when omitted.
    """
    model_config = ConfigDict(extra="forbid")

    semi_angle_half_power: float
    pd_area: float
    fov: float
    refractive_index: float
    responsivity: float
    noise_power: float
    carrier_wavelength: float
    element_spacing: Optional[float] = None

    def to_domain(self) -> VlcParams:
        spacing = self.element_spacing
        if spacing is None:
            spacing = self.carrier_wavelength / 2.0
        return VlcParams(
            semi_angle_half_power=self.semi_angle_half_power,
            pd_area=self.pd_area,
            fov=self.fov,
            refractive_index=self.refractive_index,
            responsivity=self.responsivity,
            noise_power=self.noise_power,
            carrier_wavelength=self.carrier_wavelength,
            element_spacing=spacing,
        )

    @classmethod
    def from_domain(cls, vlc: VlcParams) -> "VlcParamsSchema":
        return cls(
            semi_angle_half_power=vlc.semi_angle_half_power,
            pd_area=vlc.pd_area,
            fov=vlc.fov,
            refractive_index=vlc.refractive_index,
            responsivity=vlc.responsivity,
            noise_power=vlc.noise_power,
            carrier_wavelength=vlc.carrier_wavelength,
            element_spacing=vlc.element_spacing,
        )


class ScenarioSchema(BaseModel):
    """
    One problem instance as stored on disk.

    Every physical constant is explicit; users and ris_list are ground-plane
    (x, y) coordinates in meters, illumination_demands has one entry per user.
    """
    model_config = ConfigDict(extra="forbid")

    uav_count: int
    uav_altitude: float
    users: List[Tuple[float, float]]
    ris_list: List[Tuple[float, float]]
    ris_height: float
    ris_elements: int
    area: Tuple[float, float]
    min_separation: float
    rate_requirement: float
    illumination_demands: List[float]
    vlc: VlcParamsSchema

    def to_domain(self) -> Scenario:
        return Scenario(
            uav_count=self.uav_count,
            uav_altitude=self.uav_altitude,
            users=np.array(self.users, dtype=float).reshape(-1, 2),
            ris_positions=np.array(self.ris_list, dtype=float).reshape(-1, 2),
            ris_height=self.ris_height,
            ris_elements=self.ris_elements,
            area=self.area,
            min_separation=self.min_separation,
            rate_requirement=self.rate_requirement,
            illumination_demands=np.array(self.illumination_demands, dtype=float),
            vlc=self.vlc.to_domain(),
        )

    @classmethod
    def from_domain(cls, scenario: Scenario) -> "ScenarioSchema":
        return cls(
            uav_count=scenario.uav_count,
            uav_altitude=scenario.uav_altitude,
            users=[tuple(p) for p in scenario.users.tolist()],
            ris_list=[tuple(p) for p in scenario.ris_positions.tolist()],
            ris_height=scenario.ris_height,
            ris_elements=scenario.ris_elements,
            area=scenario.area,
            min_separation=scenario.min_separation,
            rate_requirement=scenario.rate_requirement,
            illumination_demands=scenario.illumination_demands.tolist(),
            vlc=VlcParamsSchema.from_domain(scenario.vlc),
        )


class ScenarioCounts(BaseModel):
    """Entity counts for a random scenario; None keeps the base scenario's value."""
    uav_count: Optional[conint(ge=1)] = None
    user_count: Optional[conint(ge=1)] = None
    ris_count: Optional[conint(ge=0)] = None
    ris_elements: Optional[conint(ge=1)] = Field(None, description="M, elements per RIS")
