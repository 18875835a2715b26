import numpy as np
import pytest

from tests.conftest import make_scenario, make_vlc
from uavlc.exceptions.app_exceptions import DegenerateGeometryException, DomainException
from uavlc.models.solution import Association, PhaseMatrix
from uavlc.services.channel import (
    aggregate_gain,
    array_response,
    concentrator_gain,
    gain_matrix,
    lambertian_order,
    link_budget,
    los_gain,
    rg_channel,
    ur_channel,
)


class TestLambertian:

    def test_order_of_bundled_semi_angle(self):
        assert lambertian_order(80.0) == pytest.approx(0.395920, rel=1e-5)

    def test_sixty_degrees_gives_order_one(self):
        assert lambertian_order(60.0) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("angle", [0.0, 90.0, -5.0, 120.0])
    def test_order_outside_domain(self, angle):
        with pytest.raises(DomainException):
            lambertian_order(angle)

    def test_concentrator_gain_field_of_view_is_closed(self):
        vlc = make_vlc(fov=60.0)
        expected = 4.5 ** 2 / np.sin(np.radians(60.0)) ** 2
        assert concentrator_gain(60.0, vlc) == pytest.approx(expected)
        assert concentrator_gain(60.0001, vlc) == 0.0


class TestLosGain:

    def test_nadir_at_twenty_meters(self):
        assert los_gain([0, 0, 20], [0, 0, 0], make_vlc()) == pytest.approx(1.1248e-6, rel=1e-3)

    def test_inverse_square_at_nadir(self):
        vlc = make_vlc()
        assert los_gain([0, 0, 40], [0, 0, 0], vlc) == pytest.approx(los_gain([0, 0, 20], [0, 0, 0], vlc) / 4.0)

    def test_horizontal_and_upward_links_are_dark(self):
        vlc = make_vlc()
        assert los_gain([0, 0, 5], [10, 0, 5], vlc) == 0.0
        assert los_gain([0, 0, 0], [0, 0, 5], vlc) == 0.0

    def test_outside_field_of_view(self):
        vlc = make_vlc(fov=45.0)
        # 68 degrees off the vertical
        assert los_gain([0, 0, 20], [50, 0, 0], vlc) == 0.0
        assert los_gain([0, 0, 20], [10, 0, 0], vlc) > 0.0

    def test_coincident_points(self):
        with pytest.raises(DegenerateGeometryException):
            los_gain([1, 2, 3], [1, 2, 3], make_vlc())


class TestArrayResponse:

    def test_half_wavelength_broadside_alternates(self):
        response = array_response(1.0, 4, 2.5e-7, 5e-7)
        np.testing.assert_allclose(response, [1, -1, 1, -1], atol=1e-12)

    def test_unit_modulus_and_first_entry(self):
        response = array_response(0.37, 7, 2.5e-7, 5e-7)
        np.testing.assert_allclose(np.abs(response), 1.0, atol=1e-14)
        assert response[0] == 1.0


class TestChannels:

    def test_ris_hop_out_of_view_is_zero_vector(self):
        scenario = make_scenario(users=[[20.0, 0.0]], ris=[[0.0, 0.0]], fov=45.0)
        vector = rg_channel(0, 0, scenario)
        assert vector.path_loss == 0.0
        np.testing.assert_array_equal(vector.entries, 0.0)

    def test_channel_vector_modulus_is_path_loss(self, near_field):
        vector = ur_channel([50.0, 50.0], 0, near_field)
        np.testing.assert_allclose(np.abs(vector.entries), vector.path_loss, rtol=1e-12)

    def test_no_ris_aggregate_is_los(self, bundled):
        phases = PhaseMatrix.zeros(bundled.ris_count, bundled.ris_elements)
        q = [30.0, 40.0]
        uav = [30.0, 40.0, bundled.uav_altitude]
        for user in range(bundled.user_count):
            expected = los_gain(uav, bundled.user_points[user], bundled.vlc)
            assert aggregate_gain(q, phases, np.zeros(bundled.ris_count), user, bundled) == pytest.approx(expected, rel=1e-12)

    def test_gain_matrix_matches_scalar_evaluation(self, near_field):
        rng = np.random.default_rng(3)
        phases = PhaseMatrix(rng.uniform(0, 2 * np.pi, size=(near_field.ris_count, near_field.ris_elements)))
        scenario = near_field.with_changes(uav_count=2)
        deployment = np.array([[50.0, 50.0], [40.0, 60.0]])
        assoc = Association.from_owners([0, 1], [0, 1, 0], 2)
        gains = gain_matrix(deployment, phases, assoc.ris_assoc, scenario)
        for i in range(2):
            for j in range(scenario.user_count):
                expected = aggregate_gain(deployment[i], phases, assoc.ris_assoc[i], j, scenario)
                assert gains[i, j] == pytest.approx(expected, rel=1e-10)

    def test_reflected_path_changes_near_field_gain(self, near_field):
        budget = link_budget(np.array([[50.0, 50.0]]), near_field)
        reflected = np.abs(budget.reflected(np.zeros((3, 2))))
        assert np.all(reflected > 1e-3 * budget.los[:, None, :])
