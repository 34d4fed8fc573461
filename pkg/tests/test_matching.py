import math

import networkx as nx
import numpy as np
import pytest

from src.dispatch.matching import (
    BipartiteGraph,
    Candidate,
    HopcroftKarp,
    as_candidates,
    build_relocation_graph,
    build_request_vehicle_graph,
    max_bipartite_matching,
    surplus_vehicles,
)
from src.models.trip import TripRequest
from src.models.vehicle import Vehicle, VehicleState


def random_bipartite(rng, n_left, n_right, density):
    bg = BipartiteGraph(left=list(range(n_left)), right=list(range(n_right)))
    for u in range(n_left):
        for v in range(n_right):
            if rng.random() < density:
                bg.add_edge(u, v, float(rng.integers(0, 100)))
    return bg


def is_matching(bg, pairs):
    rights = list(pairs.values())
    return len(set(rights)) == len(rights) and all((l, r) in bg.costs for l, r in pairs.items())


def test_cardinality_matches_networkx():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n_left, n_right = (int(x) for x in rng.integers(1, 25, 2))
        bg = random_bipartite(rng, n_left, n_right, float(rng.uniform(0.02, 0.4)))

        graph = nx.Graph()
        graph.add_nodes_from(('L', u) for u in bg.left)
        graph.add_nodes_from(('R', v) for v in bg.right)
        graph.add_edges_from((('L', u), ('R', v)) for u, v in bg.edges())
        reference = nx.bipartite.maximum_matching(graph, top_nodes=[('L', u) for u in bg.left])

        matching = max_bipartite_matching(bg)
        assert is_matching(bg, matching.pairs)
        assert matching.cardinality == len(reference) // 2


def test_phase_count_stays_within_square_root_bound():
    rng = np.random.default_rng(21)
    for _ in range(60):
        n_left, n_right = (int(x) for x in rng.integers(1, 120, 2))
        bg = random_bipartite(rng, n_left, n_right, float(rng.uniform(0.01, 0.3)))
        matching = max_bipartite_matching(bg)
        assert matching.phases <= 2 * math.sqrt(n_left + n_right) + 2


def test_long_augmenting_chain():
    # left i -> right i and right i+1; a greedy start on right i+1 forces one long alternating path
    n = 3000
    adjacency = {i: ([i + 1, i] if i + 1 < n else [i]) for i in range(n)}
    pairs = HopcroftKarp(adjacency).run()
    assert len(pairs) == n


def test_matching_is_deterministic():
    rng = np.random.default_rng(7)
    bg = random_bipartite(rng, 30, 30, 0.15)
    assert max_bipartite_matching(bg).sorted_pairs() == max_bipartite_matching(bg).sorted_pairs()


def test_parallel_edges_keep_cheapest():
    bg = BipartiteGraph(left=[0], right=[5])
    bg.add_edge(0, 5, 30.0)
    bg.add_edge(0, 5, 10.0)
    assert bg.n_edges == 1
    assert bg.costs[(0, 5)] == 10.0


def test_request_edges_respect_remaining_wait(toy_graph):
    request = TripRequest(id=0, request_time=0.0, pickup=0, dropoff=2)
    vehicles = [Candidate(id=0, vertex=1, ready_at=60.0), Candidate(id=1, vertex=3, ready_at=60.0)]
    bg = build_request_vehicle_graph([request], vehicles, toy_graph, max_wait=300.0, t=60.0)
    # B reaches A in 240 s, exactly the wait left; D needs 600 s
    assert bg.edges() == [(0, 0)]
    assert bg.costs[(0, 0)] == 240.0


def test_expired_request_gets_no_edges(toy_graph):
    request = TripRequest(id=0, request_time=0.0, pickup=0, dropoff=2)
    vehicles = [Candidate(id=0, vertex=0, ready_at=400.0)]
    assert build_request_vehicle_graph([request], vehicles, toy_graph, 300.0, 400.0).n_edges == 0


def test_pending_leg_counts_towards_arrival(toy_graph):
    request = TripRequest(id=0, request_time=0.0, pickup=0, dropoff=2)
    late = [Candidate(id=4, vertex=1, ready_at=100.0)]
    assert build_request_vehicle_graph([request], late, toy_graph, 300.0, 0.0).n_edges == 0
    bg = build_request_vehicle_graph([request], late, toy_graph, 400.0, 0.0)
    assert bg.costs[(0, 4)] == 340.0


def test_cheapest_vehicle_wins(toy_graph):
    request = TripRequest(id=0, request_time=0.0, pickup=0, dropoff=1)
    vehicles = [
        Vehicle(id=0, location=2),
        Vehicle(id=1, location=1),
        Vehicle(id=2, location=0, state=VehicleState.WITH_PASSENGER),
    ]
    bg = build_request_vehicle_graph([request], vehicles, toy_graph, max_wait=600.0, t=0.0)
    assert bg.right == [0, 1]
    assert max_bipartite_matching(bg).pairs == {0: 1}


def test_as_candidates_keeps_free_vehicles():
    vehicles = [Vehicle(id=0, location=2), Vehicle(id=1, location=1, state=VehicleState.RELOCATING)]
    assert as_candidates(vehicles, 30.0) == [Candidate(id=0, vertex=2, ready_at=30.0)]


def test_relocation_slots_and_horizon(toy_graph):
    idle = [Candidate(id=0, vertex=0, ready_at=0.0), Candidate(id=1, vertex=3, ready_at=0.0)]
    bg = build_relocation_graph(idle, [(0, 1, 1.5), (1, 2, -2.0)], toy_graph, relocation_horizon=300.0, t=0.0)
    assert bg.right == [0, 1]
    assert {meta.center for meta in bg.right_meta.values()} == {1}
    assert bg.edges() == [(0, 0), (0, 1)]
    assert max_bipartite_matching(bg).cardinality == 1


def test_relocation_without_needy_subareas(toy_graph):
    idle = [Candidate(id=0, vertex=0, ready_at=0.0)]
    bg = build_relocation_graph(idle, [(0, 1, 0.0)], toy_graph, 600.0, 0.0)
    assert bg.right == [] and bg.n_edges == 0


def test_surplus_offers_nearest_vehicles():
    free = {0: [(5, 100.0), (3, 50.0), (7, 50.0)], 1: [(1, 10.0)]}
    assert surplus_vehicles(free, [-2.5, 1.0]) == [3, 7]
    assert surplus_vehicles(free, [-0.5, -3.0]) == [1]
    assert surplus_vehicles(free, [0.0, 0.0]) == []


@pytest.mark.parametrize('n_left, n_right', [(0, 3), (3, 0)])
def test_empty_sides(n_left, n_right):
    bg = BipartiteGraph(left=list(range(n_left)), right=list(range(n_right)))
    assert max_bipartite_matching(bg).cardinality == 0
