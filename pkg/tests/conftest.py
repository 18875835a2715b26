from typing import Optional, Sequence

import numpy as np
import pytest

from uavlc.core.config import BUNDLED_SCENARIO
from uavlc.models.scenario import Scenario, VlcParams
from uavlc.repositories.scenarios import load_scenario
from uavlc.schemas.runs import RunConfig, Scheme


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run statistical trend tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_vlc(**overrides) -> VlcParams:
    values = dict(
        semi_angle_half_power=80.0,
        pd_area=1e-4,
        fov=90.0,
        refractive_index=4.5,
        responsivity=0.9,
        noise_power=1e-12,
        carrier_wavelength=5e-7,
        element_spacing=2.5e-7,
    )
    values.update(overrides)
    return VlcParams(**values)


def make_scenario(
    users: Sequence[Sequence[float]],
    ris: Sequence[Sequence[float]] = (),
    uav_count: int = 1,
    demands: Optional[Sequence[float]] = None,
    elements: int = 2,
    altitude: float = 20.0,
    ris_height: float = 5.0,
    min_separation: float = 10.0,
    **vlc_overrides,
) -> Scenario:
    users = np.array(users, dtype=float).reshape(-1, 2)
    return Scenario(
        uav_count=uav_count,
        uav_altitude=altitude,
        users=users,
        ris_positions=np.array(ris, dtype=float).reshape(-1, 2),
        ris_height=ris_height,
        ris_elements=elements,
        area=(100.0, 100.0),
        min_separation=min_separation,
        rate_requirement=25.0,
        illumination_demands=np.full(len(users), 9e-5) if demands is None else np.array(demands, dtype=float),
        vlc=make_vlc(**vlc_overrides),
    )


@pytest.fixture
def bundled() -> Scenario:
    return load_scenario(BUNDLED_SCENARIO)


@pytest.fixture
def near_field() -> Scenario:
    """
    One UAV slot over two users with RISs a few meters below it and a large
    photodetector, so the reflected paths are a visible share of the gain.
    """
    return make_scenario(
        users=[[55.0, 50.0], [47.0, 56.0]],
        ris=[[52.0, 50.0], [48.0, 53.0], [50.0, 46.0]],
        demands=[9e-5, 6e-5],
        elements=2,
        ris_height=15.0,
        pd_area=0.05,
    )


@pytest.fixture
def fast_config() -> RunConfig:
    return RunConfig(
        scheme=Scheme.SCHEME1_DUAL,
        seed=7,
        max_outer=3,
        sca_max_iters=5,
        randomization_trials=20,
        user_dual_iters=20,
        ris_dual_iters=20,
    )
