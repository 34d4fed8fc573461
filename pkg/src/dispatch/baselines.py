"""
Baseline Partitioners
Greedy reach-based partitioning (FDA-VeD) and power iteration clustering (PIC)

Both look at the road graph only and ignore demand gaps.
"""

import logging
import warnings
from typing import List, Optional

import numpy as np
from scipy import sparse
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from src.models.config import FdaVedConfig
from src.models.graph import RoadGraph
from src.models.partition import ActivationKind, Partition
from src.dispatch.relocation import MatrixLike, as_matrix, subarea_cost
from src.routing.road_graph import distance_matrix
from src.utils.validators import check_center_count

logger = logging.getLogger('baselines')

PIC_MAX_ITERATIONS = 1000
PIC_ACCELERATION = 1e-5


def similarity_graph(g: RoadGraph, t: float) -> sparse.csr_matrix:
    """Symmetric similarity A = S + S^T where S[i, j] = 1 / w(i, j) on direct edges."""
    n = g.n_vertices
    if g.n_edges == 0:
        return sparse.csr_matrix((n, n))
    weights = g.edge_times[:, g.slot_at(t)]
    s = sparse.csr_matrix((1.0 / weights, (g.edge_from, g.edge_to)), shape=(n, n))
    return (s + s.T).tocsr()


def _sorted_partition(centers: List[int], assignment: np.ndarray, method: str, seed: Optional[int],
                      dm: Optional[np.ndarray], stats: dict) -> Partition:
    """Reindex subareas so that subarea j belongs to the j-th smallest center."""
    order = np.argsort(centers, kind='stable')
    remap = np.empty(len(centers), dtype=np.int64)
    remap[order] = np.arange(len(centers))
    partition = Partition(
        centers=[int(centers[i]) for i in order],
        assignment=remap[np.asarray(assignment, dtype=np.int64)],
        objective=float('nan'),
        iterations=1,
        seed=seed,
        activation=ActivationKind.IGNORE,
        method=method,
        stats=stats
    )
    if dm is not None:
        partition.objective = subarea_cost(dm, partition)
    partition.objective_trace = [partition.objective]
    return partition


def fda_ved_partition(g: RoadGraph, cfg: FdaVedConfig, t: float, dm: Optional[MatrixLike] = None) -> Partition:
    n = g.n_vertices
    if n == 0:
        raise ValueError("Cannot partition an empty graph")
    D = as_matrix(dm) if dm is not None else distance_matrix(g, range(n), t).values
    n_max = cfg.n_max if cfg.n_max is not None else n
    reach = cfg.reach_seconds if cfg.reach_seconds is not None else 0.0

    within = D <= reach
    remaining = np.ones(n, dtype=bool)
    assignment = np.full(n, -1, dtype=np.int64)
    centers: List[int] = []
    lookups = 0

    while remaining.any():
        alive = np.flatnonzero(remaining)
        counts = within[np.ix_(alive, alive)].sum(axis=1)
        lookups += len(alive) * len(alive)
        center = int(alive[np.argmax(counts)])

        others = alive[alive != center]
        times = D[center, others]
        lookups += len(others)
        reachable = np.isfinite(times)
        others, times = others[reachable], times[reachable]
        nearest = others[np.lexsort((others, times))][:max(0, n_max - 1)]

        members = np.concatenate([[center], nearest]).astype(np.int64)
        assignment[members] = len(centers)
        remaining[members] = False
        centers.append(center)

    logger.debug(f"FDA-VeD: {len(centers)} subarea(s), n_max={n_max}, reach={reach:.0f}s, {lookups} lookups")
    return _sorted_partition(
        centers, assignment, "fda", None, D,
        {'lookups': lookups, 'n_sub': cfg.n_sub(n), 'n_max': n_max, 'pick_order': list(centers)}
    )


def power_iteration_embedding(sim: sparse.spmatrix, seed: Optional[int]):
    """1-D embedding of the row-normalised similarity; returns (embedding, active rows, iterations)."""
    A = sparse.csr_matrix(sim, dtype=float)
    n = A.shape[0]
    degree = np.asarray(A.sum(axis=1)).reshape(-1)
    active = degree > 0
    inverse = np.zeros(n)
    inverse[active] = 1.0 / degree[active]
    W = sparse.diags(inverse) @ A

    rng = np.random.default_rng(seed)
    v = rng.random(n) + 1e-3
    v[~active] = 0.0
    v /= np.abs(v).sum()

    threshold = PIC_ACCELERATION / n
    delta = None
    iterations = 0
    for iterations in range(1, PIC_MAX_ITERATIONS + 1):
        nxt = W @ v
        nxt /= np.abs(nxt).sum()
        step = np.abs(nxt - v)
        v = nxt
        if delta is not None and np.max(np.abs(step - delta)) < threshold:
            break
        delta = step
    return v, active, iterations


def _medoid(members: np.ndarray, D: Optional[np.ndarray], A: sparse.csr_matrix) -> int:
    if D is not None:
        sums = D[np.ix_(members, members)].sum(axis=1)
        if np.isfinite(sums).any():
            return int(members[np.argmin(sums)])
    within = np.asarray(A[members][:, members].sum(axis=1)).reshape(-1)
    return int(members[np.argmax(within)])


def pic_partition(sim: sparse.spmatrix, k: int, seed: Optional[int], dm: Optional[MatrixLike] = None) -> Partition:
    A = sparse.csr_matrix(sim, dtype=float)
    n = A.shape[0]
    check_center_count(k, n)
    D = as_matrix(dm) if dm is not None else None

    embedding, active, iterations = power_iteration_embedding(A, seed)
    if not active.any():
        raise ValueError("Similarity matrix has no nonzero row")

    spread = embedding[active].std()
    scaled = (embedding - embedding[active].mean()) / (spread if spread > 0 else 1.0)
    n_clusters = min(k, int(active.sum()))

    labels = np.zeros(n, dtype=np.int64)
    if n_clusters > 1:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', ConvergenceWarning)
            model = KMeans(n_clusters=n_clusters, n_init=10, random_state=seed)
            labels[active] = model.fit_predict(scaled[active].reshape(-1, 1))
            if (~active).any():
                labels[~active] = model.predict(scaled[~active].reshape(-1, 1))

    clusters = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    clusters = [c for c in clusters if len(c)]
    while len(clusters) < k:
        largest = max(range(len(clusters)), key=lambda i: (len(clusters[i]), -i))
        members = clusters[largest]
        clusters[largest] = members[:-1]
        clusters.append(members[-1:])
    clusters.sort(key=lambda c: int(c.min()))

    assignment = np.empty(n, dtype=np.int64)
    centers = []
    for j, members in enumerate(clusters):
        assignment[members] = j
        centers.append(_medoid(members, D, A))

    logger.debug(f"PIC: {iterations} power iteration(s), {len(clusters)} cluster(s)")
    return _sorted_partition(centers, assignment, "pic", seed, D, {'power_iterations': iterations})
