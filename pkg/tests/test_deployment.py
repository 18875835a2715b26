import numpy as np
import pytest

from tests.conftest import make_scenario
from uavlc.exceptions.app_exceptions import DomainException, ZeroPathLossException
from uavlc.models.solution import Association, PhaseMatrix
from uavlc.schemas.runs import RunConfig
from uavlc.services.channel import link_budget, los_gain
from uavlc.services.cones import solve_subproblem
from uavlc.services.deployment import (
    build_subproblem,
    compute_kappa,
    minorant_g0,
    minorant_g1,
    minorant_g2,
    minorant_g3,
    optimize_deployment,
    sca_state,
)
from uavlc.services.power import power_floor, separation_slack, uav_powers

SAMPLES = 10_000


class TestMinorants:

    def test_g0_tangent_and_below(self):
        rng = np.random.default_rng(0)
        anchor_i, anchor_k = rng.uniform(0, 100, 2), rng.uniform(0, 100, 2)
        assert minorant_g0(anchor_i, anchor_k, anchor_i, anchor_k) == pytest.approx(
            float(np.sum((anchor_i - anchor_k) ** 2)), rel=1e-12)
        points = rng.uniform(0, 100, size=(SAMPLES, 4))
        for q in points:
            exact = float(np.sum((q[:2] - q[2:]) ** 2))
            assert minorant_g0(q[:2], q[2:], anchor_i, anchor_k) <= exact + 1e-9

    def test_g1_tangent_and_below(self):
        rng = np.random.default_rng(1)
        kappa = rng.normal(size=3) + 1j * rng.normal(size=3)
        anchor_direct, anchor_ris = 1.3, rng.uniform(0.1, 1.0, 3)
        anchor = anchor_direct + np.sum(kappa * anchor_ris)
        assert minorant_g1(anchor_direct, anchor_ris, kappa, anchor_direct, anchor_ris) == pytest.approx(
            abs(anchor) ** 2, rel=1e-10)
        for _ in range(SAMPLES):
            direct, ris = rng.uniform(0, 3), rng.uniform(0, 3, 3)
            exact = abs(direct + np.sum(kappa * ris)) ** 2
            assert minorant_g1(direct, ris, kappa, anchor_direct, anchor_ris) <= exact + 1e-9

    @pytest.mark.parametrize("minorant", [minorant_g2, minorant_g3])
    def test_reciprocal_tangent_and_below(self, minorant):
        rng = np.random.default_rng(2)
        anchor, coefficient = 0.7, 2.5
        assert minorant(anchor, anchor, coefficient) == pytest.approx(coefficient / anchor, rel=1e-12)
        gains = rng.uniform(1e-3, 10.0, SAMPLES)
        values = np.array([minorant(g, anchor, coefficient) for g in gains])
        assert np.all(values <= coefficient / gains + 1e-12)

    def test_reciprocal_tangent_domain(self):
        with pytest.raises(DomainException):
            minorant_g2(1.0, 0.0, 1.0)

    def test_g1_needs_nonzero_anchor(self):
        with pytest.raises(DomainException):
            minorant_g1(0.0, [0.0], [1.0 + 0j], 0.0, [0.0])


class TestLinearization:

    def test_kappa_rebuilds_reflected_term(self, near_field):
        deployment = np.array([[50.0, 50.0]])
        phases = PhaseMatrix(np.random.default_rng(3).uniform(0, 2 * np.pi, size=(3, 2)))
        budget = link_budget(deployment, near_field)
        kappa = compute_kappa(0, 1, 0, deployment, phases, near_field)
        expected = budget.reflected(phases.theta)[0, 1, 0]
        assert kappa * budget.ur_loss[0, 1] == pytest.approx(expected, rel=1e-12)

    def test_kappa_of_dead_link(self):
        scenario = make_scenario(users=[[5.0, 5.0]], ris=[[95.0, 95.0]], fov=30.0)
        with pytest.raises(ZeroPathLossException):
            compute_kappa(0, 0, 0, np.array([[5.0, 5.0]]), PhaseMatrix.zeros(1, 2), scenario)

    def test_state_aggregate_matches_channel(self, near_field):
        deployment = np.array([[50.0, 50.0]])
        phases = PhaseMatrix(np.random.default_rng(4).uniform(0, 2 * np.pi, size=(3, 2)))
        assoc = Association.from_owners([0, 0], [0, 0, 0], 1)
        state = sca_state(deployment, phases, assoc, near_field)
        gains = link_budget(deployment, near_field).gains(phases.theta, assoc.ris_assoc)
        np.testing.assert_allclose(np.abs(state.aggregate), gains, rtol=1e-12)

    def test_start_is_strictly_feasible(self, bundled):
        deployment = np.array([[20.0, 30.0], [50.0, 80.0], [85.0, 40.0]])
        assoc = Association.from_owners([0, 1, 0, 1, 2, 2], [0, 1, 2], 3)
        phases = PhaseMatrix.zeros(3, 5)
        problem, start, _ = build_subproblem(sca_state(deployment, phases, assoc, bundled), assoc, bundled)
        result = solve_subproblem(problem, start)
        assert result.objective <= float(problem.objective @ start)


class TestOptimizeDeployment:

    def test_single_uav_moves_to_nadir(self):
        scenario = make_scenario(users=[[50.0, 50.0]])
        assoc = Association.from_owners([0], [], 1)
        phases = PhaseMatrix.zeros(0, 2)
        start = np.array([[30.0, 35.0]])
        result = optimize_deployment(start, assoc, phases, scenario, RunConfig())
        nadir = power_floor(0, scenario) / los_gain([50, 50, 20], [50, 50, 0], scenario.vlc)
        assert result.powers.sum() == pytest.approx(nadir, rel=1e-4)
        assert np.linalg.norm(result.deployment[0] - [50.0, 50.0]) < 0.5

    def test_never_worse_and_keeps_separation(self, bundled):
        deployment = np.array([[20.0, 30.0], [50.0, 80.0], [85.0, 40.0]])
        assoc = Association.from_owners([0, 1, 0, 1, 2, 2], [0, 1, 2], 3)
        phases = PhaseMatrix.zeros(3, 5)
        before = uav_powers(deployment, phases, assoc, bundled).sum()
        result = optimize_deployment(deployment, assoc, phases, bundled, RunConfig(sca_max_iters=10))
        assert result.powers.sum() <= before
        assert separation_slack(result.deployment, bundled).min() >= -1e-6
        assert np.all((result.deployment >= 0) & (result.deployment <= 100))

    def test_objective_history_is_monotone(self, bundled):
        deployment = np.array([[20.0, 30.0], [50.0, 80.0], [85.0, 40.0]])
        assoc = Association.from_owners([0, 1, 0, 1, 2, 2], [0, 1, 2], 3)
        result = optimize_deployment(deployment, assoc, PhaseMatrix.zeros(3, 5), bundled, RunConfig(sca_max_iters=10))
        history = result.state.objective_history
        assert all(b <= a for a, b in zip(history, history[1:]))
