import json
from itertools import combinations

import numpy as np
import pytest

from src.dispatch.relocation import (
    assign_subareas,
    brute_force_centers,
    descend,
    multi_restart_search,
    objective,
    search_centers,
    subarea_cost,
    update_centers,
)
from src.errors import EnumerationCapError, UnreachableVertexError
from src.experiments.scenario import random_instance
from src.models.partition import ActivationKind, Partition, activation
from src.routing.road_graph import distance_matrix
from src.utils.helpers import canonical_json

IGNORE = ActivationKind.IGNORE
IDENTITY = ActivationKind.IDENTITY
RELU = ActivationKind.RELU

# objective in minutes for every pair of centers on the toy graph
TOY_OBJECTIVES = {
    IGNORE: {(0, 1): 11, (0, 2): 13, (0, 3): 10, (1, 2): 7, (1, 3): 9, (2, 3): 11},
    IDENTITY: {(0, 1): 3, (0, 2): 2, (0, 3): -11, (1, 2): 7, (1, 3): 4, (2, 3): -6},
}


def test_activation_functions():
    gaps = np.array([-2.0, 0.0, 3.0])
    assert IGNORE.apply(gaps).tolist() == [1.0, 1.0, 1.0]
    assert IDENTITY.apply(gaps).tolist() == [-2.0, 0.0, 3.0]
    assert RELU.apply(gaps).tolist() == [0.0, 0.0, 3.0]
    assert activation('sigmoid', 0.0) == pytest.approx(0.5)
    assert activation(ActivationKind.SOFTPLUS, 0.0) == pytest.approx(np.log(2.0))
    assert ActivationKind.parse(' ReLU ') is RELU
    with pytest.raises(ValueError):
        ActivationKind.parse('tanh')


@pytest.mark.parametrize('kind', [IGNORE, IDENTITY])
def test_toy_objectives(toy_minutes, toy_gaps, kind):
    for centers, expected in TOY_OBJECTIVES[kind].items():
        assert objective(toy_minutes, centers, toy_gaps, kind) == expected


@pytest.mark.parametrize('kind, centers, value', [(IGNORE, [1, 2], 7), (IDENTITY, [0, 3], -11)])
def test_toy_brute_force(toy_minutes, toy_gaps, kind, centers, value):
    best = brute_force_centers(None, 2, toy_gaps, kind, dm=toy_minutes)
    assert best.centers == centers
    assert best.objective == value
    assert best.stats['enumerated'] == 6


def test_assignment_takes_smallest_signed_product(toy_minutes, toy_gaps):
    p = assign_subareas(toy_minutes, [3, 0], toy_gaps, IDENTITY)
    assert p.centers == [0, 3]
    # B: min(5 * -1, 11 * -1) goes to D; C has zero weight and takes the first center
    assert p.assignment.tolist() == [0, 1, 0, 1]
    p.validate()


def test_centers_belong_to_their_own_subarea():
    D = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    # the identity weight of vertex 0 would pull it towards vertex 1 at -1
    p = assign_subareas(D, [0, 1], [-1.0, -1.0, 0.0], IDENTITY)
    assert p.assignment[0] == 0 and p.assignment[1] == 1
    p.validate()


def test_unreachable_vertex_raises():
    D = np.array([[0, 1, np.inf], [1, 0, np.inf], [1, 1, 0]])
    with pytest.raises(UnreachableVertexError) as err:
        assign_subareas(D, [0], np.zeros(3), IGNORE)
    assert err.value.vertex == 2
    assert assign_subareas(D, [2], np.zeros(3), IGNORE).objective == 2.0


def test_subarea_cost_prices_the_given_partition(toy_minutes):
    p = Partition(centers=[1, 2], assignment=np.array([1, 0, 1, 0]), objective=0.0)
    assert subarea_cost(toy_minutes, p) == 5 + 3
    p = Partition(centers=[1, 2], assignment=np.array([0, 0, 1, 0]), objective=0.0)
    assert subarea_cost(toy_minutes, p) == 4 + 3


def test_partition_summary_is_one_json_line(toy_minutes, toy_gaps):
    p = descend(toy_minutes, 2, toy_gaps, IDENTITY, initial=[0, 3])
    p.seed = 4
    line = canonical_json(p.summary())
    assert '\n' not in line
    assert json.loads(line) == {'objective': -11.0, 'iterations': 1, 'seed': 4, 'activation': 'identity'}


def test_update_prefers_incumbent_on_ties():
    D = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    p = assign_subareas(D, [2], np.zeros(3), IGNORE)
    assert update_centers(D, p, np.zeros(3), IGNORE) == [2]


def test_k_equal_to_n_stops_after_one_evaluation(toy_minutes, toy_gaps):
    p = descend(toy_minutes, 4, toy_gaps, RELU, seed=0)
    assert p.centers == [0, 1, 2, 3]
    assert p.objective == 0.0
    assert p.iterations == 1


def test_invalid_k(toy_minutes, toy_gaps):
    with pytest.raises(ValueError):
        descend(toy_minutes, 0, toy_gaps, RELU, seed=0)
    with pytest.raises(ValueError):
        descend(toy_minutes, 5, toy_gaps, RELU, seed=0)
    with pytest.raises(ValueError):
        descend(toy_minutes, 2, toy_gaps, RELU, initial=[1, 1])


def test_enumeration_cap():
    D = np.ones((10, 10)) - np.eye(10)
    with pytest.raises(EnumerationCapError):
        brute_force_centers(None, 3, np.zeros(10), IGNORE, dm=D, cap=100)


def test_search_uses_graph_distances(toy_graph, toy_gaps):
    p = search_centers(toy_graph, 2, toy_gaps, IGNORE, seed=None, t=0.0, initial=[1, 2])
    assert p.centers == [1, 2]
    assert p.objective == 7 * 60


@pytest.mark.parametrize('kind', list(ActivationKind))
def test_descent_properties(kind):
    for instance in range(40):
        n, k = 5 + instance % 8, 1 + instance % 4
        g, gaps = random_instance(n, k, seed=instance)
        D = distance_matrix(g, range(n), 0.0).values
        p = descend(D, k, gaps, kind, seed=instance)

        p.validate()
        assert p.k == k
        assert all(b < a for a, b in zip(p.objective_trace, p.objective_trace[1:]))
        assert p.objective == pytest.approx(objective(D, p.centers, gaps, kind))

        again = descend(D, k, gaps, kind, initial=p.centers)
        assert again.centers == p.centers
        assert again.objective_trace == [p.objective]


@pytest.mark.parametrize('kind', [IGNORE, IDENTITY, RELU])
def test_best_descent_over_all_starts_is_optimal(kind):
    for instance in range(50):
        n, k = 4 + instance % 5, 1 + instance % 3
        g, gaps = random_instance(n, k, seed=1000 + instance)
        D = distance_matrix(g, range(n), 0.0).values
        optimum = brute_force_centers(None, k, gaps, kind, dm=D)
        found = min(descend(D, k, gaps, kind, initial=start).objective for start in combinations(range(n), k))
        assert found == optimum.objective


def test_restarts_pick_the_lowest_objective():
    g, gaps = random_instance(12, 3, seed=5)
    D = distance_matrix(g, range(g.n_vertices), 0.0)
    seeds = list(range(6))
    best = multi_restart_search(g, 3, gaps, RELU, seeds, 0.0, dm=D)
    singles = [descend(D, 3, gaps, RELU, seed=s).objective for s in seeds]
    assert best.objective == min(singles)
    assert best.stats['restart_objectives'] == singles


def test_restart_order_does_not_change_the_result():
    g, gaps = random_instance(14, 3, seed=8)
    seeds = list(range(10))
    shuffled = list(np.random.default_rng(0).permutation(seeds))
    a = multi_restart_search(g, 3, gaps, RELU, seeds, 0.0)
    b = multi_restart_search(g, 3, gaps, RELU, [int(s) for s in shuffled], 0.0)
    assert a.centers == b.centers
    assert np.array_equal(a.assignment, b.assignment)
    assert a.objective == b.objective
    assert a.seed == b.seed


@pytest.mark.parametrize('kind', [IGNORE, IDENTITY, RELU])
def test_single_restart_is_a_plain_search(kind):
    g, gaps = random_instance(12, 3, seed=17)
    for seed in range(5):
        restarted = multi_restart_search(g, 3, gaps, kind, [seed], 0.0)
        plain = search_centers(g, 3, gaps, kind, seed=seed, t=0.0)
        assert restarted.centers == plain.centers
        assert np.array_equal(restarted.assignment, plain.assignment)
        assert restarted.objective == plain.objective


def test_restarts_find_the_toy_optimum(toy_graph, toy_gaps):
    best = multi_restart_search(toy_graph, 2, toy_gaps, IDENTITY, range(8), 0.0)
    assert best.centers == [0, 3]
    assert best.objective == -660.0


def test_restart_workers_do_not_change_the_result():
    g, gaps = random_instance(15, 4, seed=11)
    seeds = list(range(8))
    serial = multi_restart_search(g, 4, gaps, IDENTITY, seeds, 0.0)
    threaded = multi_restart_search(g, 4, gaps, IDENTITY, seeds, 0.0, workers=4)
    assert serial.centers == threaded.centers
    assert serial.objective == threaded.objective
    assert serial.seed == threaded.seed


def test_same_seed_same_partition():
    g, gaps = random_instance(15, 4, seed=2)
    a = search_centers(g, 4, gaps, RELU, seed=9, t=0.0)
    b = search_centers(g, 4, gaps, RELU, seed=9, t=0.0)
    assert a.centers == b.centers
    assert np.array_equal(a.assignment, b.assignment)
