"""
Synthetic surge scenario: balanced background demand plus a 20-minute burst of pickups at one corner
"""

import numpy as np
import pytest

from src.dispatch.demand import build_demand_profile, ingest_trips
from src.dispatch.metrics import audit
from src.dispatch.simulator import DispatchSimulator, run
from src.experiments.scenario import build_scenario
from tests.conftest import make_config

SEEDS = range(10)
METHODS = ('dfda', 'fda', 'none')
N_REQUESTS = 400 + 120


@pytest.fixture(scope='module')
def scenario_inputs():
    scenario = build_scenario(
        rows=10, cols=10, n_requests=400, duration=7200.0, history_days=7,
        hotspot_share=0.0, surge_requests=120, surge_offset=3600.0, surge_length=1200.0, seed=0
    )
    store = ingest_trips(scenario.all_trips, scenario.graph)
    profile = build_demand_profile(store, scenario.graph.n_vertices, before=scenario.start, days=scenario.history_days)
    return scenario, store, profile


def simulate(inputs, method, seed):
    scenario, store, profile = inputs
    config = make_config(
        n_vehicles=60, k=4, method=method, activation='relu', seed=seed, restarts=8,
        start=scenario.start, duration=scenario.duration
    )
    return run(DispatchSimulator(scenario.graph, store, profile, config))


@pytest.fixture(scope='module')
def reports(scenario_inputs):
    results = {}
    for method in METHODS:
        for seed in SEEDS:
            report, log = simulate(scenario_inputs, method, seed)
            checked = audit(log)
            assert checked.ok, checked.violations
            assert report.n_requests == N_REQUESTS
            results[method, seed] = report
    return results


def mean_of(reports, method, field):
    return float(np.mean([getattr(reports[method, seed], field) for seed in SEEDS]))


@pytest.mark.slow
def test_relocation_raises_the_serving_ratio(reports):
    assert mean_of(reports, 'dfda', 'served_ratio') >= mean_of(reports, 'none', 'served_ratio') + 0.02


@pytest.mark.slow
def test_demand_aware_centers_keep_up_with_travel_time_centers(reports):
    assert mean_of(reports, 'dfda', 'served_ratio') >= mean_of(reports, 'fda', 'served_ratio') - 0.005


@pytest.mark.slow
def test_relocation_keeps_the_distance_overhead_small(reports):
    assert mean_of(reports, 'dfda', 'rho') <= 1.10 * mean_of(reports, 'none', 'rho')


@pytest.mark.slow
def test_scenario_runs_are_reproducible(scenario_inputs):
    _, first = simulate(scenario_inputs, 'dfda', 3)
    _, second = simulate(scenario_inputs, 'dfda', 3)
    assert first.digest() == second.digest()
