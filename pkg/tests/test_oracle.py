import numpy as np
import pytest

from tests.conftest import make_scenario
from uavlc.exceptions.app_exceptions import TooLargeException
from uavlc.models.solution import Association, PhaseMatrix
from uavlc.schemas.runs import RunConfig
from uavlc.services.channel import link_budget
from uavlc.services.oracle import exhaustive_association, grid_deployment, grid_phase_search
from uavlc.services.phases import align_phases, optimize_uav_phases
from uavlc.services.power import power_floors

DEPLOYMENT = np.array([[50.0, 50.0]])


def phase_objective(rows, users, ris_set, scenario):
    """max_j −|h_j|²/A_j² for one UAV at DEPLOYMENT with the given rows."""
    theta = np.zeros((scenario.ris_count, scenario.ris_elements))
    theta[list(ris_set)] = rows
    ris_row = np.zeros((1, scenario.ris_count))
    ris_row[0, list(ris_set)] = 1.0
    gains = link_budget(DEPLOYMENT, scenario).gains(theta, ris_row)[0, users]
    return float(np.max(-(gains / power_floors(scenario)[users]) ** 2))


def circular_gap_deg(a, b):
    diff = np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b))))
    return np.degrees(np.abs(diff))


class TestGridPhaseSearch:

    def test_single_user_lands_next_to_alignment(self, near_field):
        result = grid_phase_search(0, [0], [0], DEPLOYMENT, near_field)
        aligned = align_phases(0, 0, DEPLOYMENT, [0], near_field)
        assert result.points == 360 ** 2
        assert circular_gap_deg(result.rows, aligned).max() <= 1.0

    def test_sdp_close_to_grid_optimum(self, near_field):
        grid = grid_phase_search(0, [0, 1], [0], DEPLOYMENT, near_field)
        rows = optimize_uav_phases(0, [0, 1], [0], DEPLOYMENT, near_field, RunConfig(seed=3))
        achieved = phase_objective(rows, [0, 1], [0], near_field)
        assert achieved <= 0.98 * grid.objective

    def test_refuses_huge_grids(self, near_field):
        with pytest.raises(TooLargeException):
            grid_phase_search(0, [0, 1], [0, 1, 2], DEPLOYMENT, near_field)


class TestExhaustiveAssociation:

    def test_candidate_count(self):
        scenario = make_scenario(
            users=[[20.0, 20.0], [50.0, 50.0], [80.0, 80.0]], ris=[[30.0, 30.0], [70.0, 70.0]], uav_count=2,
        )
        result = exhaustive_association(scenario, np.array([[20.0, 20.0], [80.0, 80.0]]), PhaseMatrix.zeros(2, 2))
        assert result.candidates == 32
        np.testing.assert_array_equal(result.assoc.user_owner[[0, 2]], [0, 1])

    def test_single_uav_has_one_candidate(self):
        scenario = make_scenario(users=[[20.0, 20.0], [50.0, 50.0]], ris=[[30.0, 30.0]])
        result = exhaustive_association(scenario, DEPLOYMENT, PhaseMatrix.zeros(1, 2))
        assert result.candidates == 1

    def test_fixed_users_enumerate_ris_only(self):
        scenario = make_scenario(users=[[20.0, 20.0], [80.0, 80.0]], ris=[[30.0, 30.0], [70.0, 70.0]], uav_count=2)
        assoc = Association.from_owners([1, 0], [0, 0], 2)
        result = exhaustive_association(
            scenario, np.array([[20.0, 20.0], [80.0, 80.0]]), PhaseMatrix.zeros(2, 2), user_assoc=assoc.user_assoc,
        )
        assert result.candidates == 4
        np.testing.assert_array_equal(result.assoc.user_owner, [1, 0])

    def test_refuses_huge_enumeration(self):
        users = [[10.0 * k, 10.0 * k] for k in range(10)]
        scenario = make_scenario(users=users, ris=[[5.0, 5.0], [50.0, 5.0], [95.0, 5.0]], uav_count=3)
        deployment = np.array([[10.0, 10.0], [50.0, 50.0], [90.0, 90.0]])
        with pytest.raises(TooLargeException):
            exhaustive_association(scenario, deployment, PhaseMatrix.zeros(3, 2))


class TestGridDeployment:

    def test_single_uav_goes_to_nadir(self):
        scenario = make_scenario(users=[[50.0, 50.0]])
        result = grid_deployment(scenario, Association.from_owners([0], [], 1), PhaseMatrix.zeros(0, 2), step=10.0)
        np.testing.assert_allclose(result.deployment, [[50.0, 50.0]])
        assert result.lattice_points == 121

    def test_two_uavs_split_users(self):
        scenario = make_scenario(users=[[20.0, 20.0], [80.0, 80.0]], uav_count=2)
        result = grid_deployment(scenario, Association.from_owners([0, 1], [], 2), PhaseMatrix.zeros(0, 2), step=10.0)
        np.testing.assert_allclose(result.deployment, [[20.0, 20.0], [80.0, 80.0]])

    def test_idle_uav_costs_nothing(self):
        scenario = make_scenario(users=[[20.0, 20.0], [30.0, 20.0]], uav_count=2)
        result = grid_deployment(scenario, Association.from_owners([0, 0], [], 2), PhaseMatrix.zeros(0, 2), step=10.0)
        assert result.powers[1] == 0.0
        assert np.linalg.norm(result.deployment[0] - result.deployment[1]) >= scenario.min_separation

    def test_three_uavs_refused(self):
        scenario = make_scenario(users=[[20.0, 20.0]], uav_count=3)
        with pytest.raises(TooLargeException):
            grid_deployment(scenario, Association.from_owners([0], [], 3), PhaseMatrix.zeros(0, 2), step=10.0)
