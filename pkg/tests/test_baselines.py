import numpy as np
import pytest

from src.dispatch.baselines import fda_ved_partition, pic_partition, power_iteration_embedding, similarity_graph
from src.experiments.scenario import grid_graph, random_instance
from src.models.config import FdaVedConfig
from src.routing.road_graph import distance_matrix


def test_fda_ved_on_toy(toy_graph):
    p = fda_ved_partition(toy_graph, FdaVedConfig(n_max=2, reach_seconds=600), 0.0)
    assert p.stats['pick_order'] == [1, 2]
    assert p.centers == [1, 2]
    assert p.assignment.tolist() == [1, 0, 1, 0]
    assert p.objective == 480.0
    assert p.method == 'fda'
    p.validate()


def test_fda_ved_resolves_defaults():
    cfg = FdaVedConfig().resolve(n_vertices=10, k=3, max_wait=300.0)
    assert cfg.n_max == 4
    assert cfg.reach_seconds == 300.0
    assert cfg.n_sub(10) == 2


def test_fda_ved_covers_every_vertex():
    g = grid_graph(5, 5, edge_seconds=60.0)
    p = fda_ved_partition(g, FdaVedConfig(n_max=6, reach_seconds=120.0), 0.0)
    p.validate()
    assert p.subarea_sizes().max() <= 6
    assert p.subarea_sizes().sum() == 25
    assert p.k == 5


def test_similarity_is_symmetric(toy_graph):
    A = similarity_graph(toy_graph, 0.0).toarray()
    assert np.allclose(A, A.T)
    assert A[0, 1] == pytest.approx(1 / 300 + 1 / 240)
    assert A[0, 2] == pytest.approx(1 / 300)
    assert A[0, 3] == 0.0


def test_pic_gives_k_nonempty_subareas():
    g = grid_graph(6, 6, edge_seconds=60.0)
    dm = distance_matrix(g, range(g.n_vertices), 0.0)
    p = pic_partition(similarity_graph(g, 0.0), 4, seed=1, dm=dm)
    p.validate()
    assert p.k == 4
    assert (p.subarea_sizes() > 0).all()
    assert p.method == 'pic'
    assert np.isfinite(p.objective)


def test_pic_is_scale_invariant():
    g, _ = random_instance(12, 3, seed=4)
    sim = similarity_graph(g, 0.0)
    a = pic_partition(sim, 3, seed=0)
    b = pic_partition(sim * 4.0, 3, seed=0)
    assert a.centers == b.centers
    assert np.array_equal(a.assignment, b.assignment)


def test_power_iteration_skips_isolated_rows():
    g, _ = random_instance(6, 2, seed=0)
    sim = similarity_graph(g, 0.0).toarray()
    sim[5, :] = 0.0
    sim[:, 5] = 0.0
    embedding, active, iterations = power_iteration_embedding(sim, seed=0)
    assert not active[5]
    assert embedding[5] == 0.0
    assert iterations >= 1
    assert np.abs(embedding).sum() == pytest.approx(1.0)


def test_pic_rejects_bad_k(toy_graph):
    with pytest.raises(ValueError):
        pic_partition(similarity_graph(toy_graph, 0.0), 5, seed=0)


@pytest.mark.parametrize('size, n_max', [((5, 5), 4), ((8, 9), 10), ((10, 10), 7), ((14, 14), 25)])
def test_fda_ved_lookups_grow_with_subareas_times_squared_size(size, n_max):
    g = grid_graph(*size, edge_seconds=60.0)
    n = g.n_vertices
    cfg = FdaVedConfig(n_max=n_max, reach_seconds=120.0)
    p = fda_ved_partition(g, cfg, 0.0)

    # every round rescans the unclaimed block, then prices the chosen center's row
    alive = [n - r * n_max for r in range(p.k)]
    assert p.k == -(-n // n_max)
    assert p.stats['n_sub'] == n // n_max
    assert p.stats['lookups'] == sum(a * a + a - 1 for a in alive)
    assert p.stats['lookups'] <= 2 * p.stats['n_sub'] * n * n


def two_blocks(link, interleaved=False):
    A = np.zeros((8, 8))
    first = [0, 2, 4, 6] if interleaved else [0, 1, 2, 3]
    second = [v for v in range(8) if v not in first]
    for block in (first, second):
        for u in block:
            for v in block:
                if u != v:
                    A[u, v] = 1.0
    A[first[-1], second[0]] = A[second[0], first[-1]] = link
    return A


def normalized_cut_blocks(A):
    n = len(A)
    degree = A.sum(axis=1)
    best, best_value = None, np.inf
    for mask in range(1, 2 ** (n - 1)):
        side = np.array([True] + [bool(mask >> i & 1) for i in range(n - 1)])
        if side.all():
            continue
        cut = A[side][:, ~side].sum()
        value = cut / degree[side].sum() + cut / degree[~side].sum()
        if value < best_value:
            best, best_value = side, value
    return {frozenset(np.flatnonzero(best).tolist()), frozenset(np.flatnonzero(~best).tolist())}


def blocks_of(p):
    return {frozenset(np.flatnonzero(p.assignment == j).tolist()) for j in range(p.k)}


def test_pic_separates_disjoint_cliques():
    sim = two_blocks(0.0, interleaved=True)
    for seed in range(5):
        p = pic_partition(sim, 2, seed=seed)
        p.validate()
        assert p.assignment.tolist() == [0, 1, 0, 1, 0, 1, 0, 1]
        assert p.centers == [0, 1]


def test_pic_with_one_cluster_keeps_everything_together():
    p = pic_partition(two_blocks(0.0, interleaved=True), 1, seed=0)
    assert p.k == 1
    assert p.assignment.tolist() == [0] * 8


@pytest.mark.parametrize('link', [0.0, 0.05])
def test_pic_matches_the_minimum_normalized_cut(link):
    sim = two_blocks(link)
    expected = normalized_cut_blocks(sim)
    assert expected == {frozenset({0, 1, 2, 3}), frozenset({4, 5, 6, 7})}
    for seed in range(5):
        assert blocks_of(pic_partition(sim, 2, seed=seed)) == expected
