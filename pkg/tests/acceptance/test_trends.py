"""
Statistical trend checks over seeded random drops. Slow; run with
`pytest --runslow tests/acceptance`.
"""
from functools import lru_cache

import numpy as np
import pytest

from uavlc.core.config import BUNDLED_SCENARIO
from uavlc.models.solution import PhaseMatrix
from uavlc.repositories.scenarios import load_scenario, random_scenario
from uavlc.schemas.runs import RunConfig, Scheme
from uavlc.schemas.scenario import ScenarioCounts
from uavlc.services.association import optimize_user_association, ris_dual_solve
from uavlc.services.oracle import exhaustive_association
from uavlc.services.orchestrator import initialize, run, summarize
from uavlc.services.power import check_feasibility

pytestmark = pytest.mark.slow

SEEDS = range(20)
# relative slack for comparisons between runs that take different block paths
PATH_TOLERANCE = 1e-4


@lru_cache(maxsize=None)
def bundled():
    return load_scenario(BUNDLED_SCENARIO)


@lru_cache(maxsize=None)
def drop(seed, **counts):
    return random_scenario(seed, ScenarioCounts(**counts), bundled())


@lru_cache(maxsize=None)
def traced(scheme, seed, local_polish=True, **counts):
    scenario = drop(seed, **counts)
    trace = run(scenario, RunConfig(scheme=scheme, seed=seed, local_polish=local_polish))
    return trace, summarize(trace, scenario)


def mean_power(scheme, **counts):
    return float(np.mean([traced(scheme, seed, **counts)[1].total_power_W for seed in SEEDS]))


def test_association_pipeline_matches_enumeration():
    config = RunConfig(seed=0)
    for seed in SEEDS:
        scenario = drop(seed, uav_count=2, user_count=3, ris_count=2, ris_elements=2)
        start = initialize(scenario, seed)
        phases = PhaseMatrix.zeros(2, 2)
        users = optimize_user_association(start.deployment, phases, start.assoc, scenario, config)
        ris = ris_dual_solve(start.deployment, phases, users.assoc, scenario, config)
        final = optimize_user_association(start.deployment, ris.phases, ris.assoc, scenario, config)
        oracle = exhaustive_association(scenario, start.deployment, phases)
        assert final.total_power <= oracle.total_power * (1 + 1e-6), f"seed {seed}"


def test_bundled_runs_converge_monotonically():
    scenario = bundled()
    for seed in SEEDS:
        trace = run(scenario, RunConfig(seed=seed))
        objectives = trace.objectives
        assert all(b <= a for a, b in zip(objectives, objectives[1:])), f"seed {seed}"
        assert len(objectives) <= 31
        assert check_feasibility(trace.solution, scenario, tolerance=1e-6).feasible


def test_ris_lowers_mean_power():
    counts = dict(user_count=10, ris_count=3, ris_elements=5)
    baseline = mean_power(Scheme.NO_RIS, **counts)
    for scheme in (Scheme.SCHEME1_DUAL, Scheme.SCHEME2_GREEDY):
        power = mean_power(scheme, **counts)
        print(f"{scheme.value}: {100.0 * (baseline - power) / baseline:.6f} % below no-ris")
        assert power < baseline


@pytest.mark.parametrize("field, values", [
    ("ris_elements", range(1, 10)),
    ("ris_count", range(0, 5)),
])
def test_more_reflectors_never_cost_power(field, values):
    values = list(values)
    pairs = [
        (traced(Scheme.SCHEME1_DUAL, seed, **{field: small})[1].total_power_W,
         traced(Scheme.SCHEME1_DUAL, seed, **{field: large})[1].total_power_W)
        for seed in SEEDS
        for small, large in zip(values, values[1:])
    ]
    holding = sum(large <= small * (1 + PATH_TOLERANCE) for small, large in pairs)
    assert holding >= 0.9 * len(pairs)


def test_power_grows_with_altitude_without_ris():
    series = []
    for height in range(20, 101, 10):
        powers = []
        for seed in SEEDS:
            scenario = drop(seed).with_changes(uav_altitude=float(height))
            powers.append(summarize(run(scenario, RunConfig(scheme=Scheme.NO_RIS, seed=seed)), scenario).total_power_W)
        series.append(np.mean(powers))
    print("no-ris mean power by altitude:", series)
    assert all(b > a for a, b in zip(series, series[1:]))


def test_dual_beats_greedy_and_greedy_is_faster():
    # both schemes exactly as their own methods leave them, no shared polish
    dual = [traced(Scheme.SCHEME1_DUAL, seed, local_polish=False)[1] for seed in SEEDS]
    greedy = [traced(Scheme.SCHEME2_GREEDY, seed, local_polish=False)[1] for seed in SEEDS]
    wins = sum(d.total_power_W <= g.total_power_W + 1e-6 for d, g in zip(dual, greedy))
    assert wins >= 0.8 * len(SEEDS)
    assert np.mean([g.seconds_per_iteration for g in greedy]) < np.mean([d.seconds_per_iteration for d in dual])


def test_ris_mostly_serve_the_nearest_uav():
    fractions = [traced(Scheme.SCHEME1_DUAL, seed)[1].nearest_ris_fraction for seed in SEEDS]
    print("nearest-UAV fraction:", np.mean(fractions))
    assert np.mean(fractions) > 0.5
