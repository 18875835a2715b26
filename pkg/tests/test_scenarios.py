import json

import numpy as np
import pytest

from uavlc.core.config import BUNDLED_SCENARIO
from uavlc.exceptions.app_exceptions import SchemaException, ValidationException
from uavlc.repositories.scenarios import load_scenario, parse_scenario, random_scenario
from uavlc.schemas.scenario import ScenarioCounts, ScenarioSchema


@pytest.fixture
def bundled_document() -> dict:
    return json.loads(BUNDLED_SCENARIO.read_text())


class TestLoadScenario:

    def test_bundled_constants(self, bundled):
        assert bundled.uav_altitude == 20.0
        assert bundled.vlc.fov == 90.0
        assert bundled.vlc.refractive_index == 4.5
        assert bundled.ris_height == 5.0
        assert bundled.min_separation == 10.0
        assert bundled.vlc.responsivity == 0.9
        assert bundled.vlc.noise_power == 1e-12
        assert (bundled.uav_count, bundled.user_count, bundled.ris_count, bundled.ris_elements) == (3, 6, 3, 5)

    def test_text_and_path_agree(self, bundled_document):
        from_text = load_scenario(json.dumps(bundled_document))
        from_path = load_scenario(BUNDLED_SCENARIO)
        np.testing.assert_array_equal(from_text.users, from_path.users)

    def test_missing_field_reports_path(self, bundled_document):
        del bundled_document["vlc"]["fov"]
        with pytest.raises(SchemaException) as info:
            parse_scenario(json.dumps(bundled_document))
        assert info.value.message.startswith("vlc.fov")

    def test_unknown_field(self, bundled_document):
        bundled_document["wind_speed"] = 3.0
        with pytest.raises(SchemaException):
            parse_scenario(json.dumps(bundled_document))

    def test_not_json(self):
        with pytest.raises(SchemaException):
            parse_scenario("{not json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaException):
            load_scenario(tmp_path / "absent.json")

    def test_invariant_violation(self, bundled_document):
        bundled_document["ris_height"] = 30.0
        with pytest.raises(ValidationException):
            parse_scenario(json.dumps(bundled_document))

    def test_element_spacing_defaults_to_half_wavelength(self, bundled_document):
        del bundled_document["vlc"]["element_spacing"]
        scenario = parse_scenario(json.dumps(bundled_document))
        assert scenario.vlc.element_spacing == pytest.approx(2.5e-7)

    def test_schema_round_trip_keeps_constants(self, bundled):
        again = ScenarioSchema.from_domain(bundled).to_domain()
        np.testing.assert_array_equal(again.ris_positions, bundled.ris_positions)
        assert again.vlc.lambertian_order == bundled.vlc.lambertian_order


class TestRandomScenario:

    def test_deterministic(self, bundled):
        first = random_scenario(11, ScenarioCounts(user_count=10), bundled)
        second = random_scenario(11, ScenarioCounts(user_count=10), bundled)
        np.testing.assert_array_equal(first.users, second.users)
        np.testing.assert_array_equal(first.illumination_demands, second.illumination_demands)

    def test_demands_in_interval(self, bundled):
        for seed in range(5):
            demands = random_scenario(seed, ScenarioCounts(user_count=50), bundled, (1e-5, 9e-5)).illumination_demands
            assert np.all((demands >= 1e-5) & (demands <= 9e-5))

    def test_counts_override_base(self, bundled):
        scenario = random_scenario(0, ScenarioCounts(uav_count=2, user_count=4, ris_count=0, ris_elements=3), bundled)
        assert (scenario.uav_count, scenario.user_count, scenario.ris_count, scenario.ris_elements) == (2, 4, 0, 3)

    def test_ris_positions_nest_across_counts(self, bundled):
        small = random_scenario(5, ScenarioCounts(ris_count=2), bundled)
        large = random_scenario(5, ScenarioCounts(ris_count=4), bundled)
        np.testing.assert_array_equal(small.ris_positions, large.ris_positions[:2])
        np.testing.assert_array_equal(small.users, large.users)

    def test_points_inside_area(self, bundled):
        scenario = random_scenario(2, ScenarioCounts(user_count=30, ris_count=10), bundled)
        assert np.all((scenario.users >= 0) & (scenario.users <= 100))
        assert np.all((scenario.ris_positions >= 0) & (scenario.ris_positions <= 100))

    def test_bad_demand_range(self, bundled):
        with pytest.raises(ValidationException):
            random_scenario(0, None, bundled, (5e-5, 1e-5))
