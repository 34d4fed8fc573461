"""
Relocation Center Search
Demand-weighted k-medoids over the directed road graph

A vertex's cost is the travel time from its center weighted by the activated
pickup-dropoff gap. Centers serve themselves at zero cost; every other vertex
takes the smallest signed product over the centers that reach it.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from src.errors import EnumerationCapError, UnreachableVertexError
from src.models.graph import DistanceMatrix, RoadGraph
from src.models.partition import ActivationKind, Partition
from src.routing.road_graph import distance_matrix
from src.utils.validators import check_center_count, check_gap_vector

logger = logging.getLogger('relocation')

MatrixLike = Union[DistanceMatrix, np.ndarray]

DEFAULT_ENUMERATION_CAP = 10 ** 6
DEFAULT_MAX_ITERATIONS = 1000
RELATIVE_TOLERANCE = 1e-9


def as_matrix(dm: MatrixLike) -> np.ndarray:
    if isinstance(dm, DistanceMatrix):
        if not dm.is_complete():
            raise ValueError("Relocation search needs distances from every vertex")
        return dm.values
    values = np.asarray(dm, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"Distance matrix must be square, got shape {values.shape}")
    return values


def _tolerance(value: float) -> float:
    return RELATIVE_TOLERANCE * max(1.0, abs(value))


def _weights(gaps: Sequence[float], kind: ActivationKind, n: int) -> np.ndarray:
    return np.asarray(ActivationKind.parse(kind).apply(check_gap_vector(gaps, n)), dtype=float)


def _evaluate(D: np.ndarray, centers: Sequence[int], weights: np.ndarray,
              labels: Optional[Sequence[str]] = None):
    """Assignment and objective for sorted centers."""
    n = D.shape[0]
    rows = D[list(centers)]
    reachable = np.isfinite(rows)
    products = np.where(reachable, np.where(reachable, rows, 0.0) * weights[None, :], np.inf)

    assignment = np.argmin(products, axis=0)
    contribution = products[assignment, np.arange(n)]

    is_center = np.zeros(n, dtype=bool)
    is_center[list(centers)] = True
    assignment[list(centers)] = np.arange(len(centers))
    contribution[is_center] = 0.0

    stranded = np.flatnonzero(~is_center & ~reachable.any(axis=0))
    if len(stranded):
        v = int(stranded[0])
        raise UnreachableVertexError(v, labels[v] if labels is not None else None)

    return assignment, float(contribution.sum())


def objective(dm: MatrixLike, centers: Iterable[int], gaps: Sequence[float], kind: ActivationKind) -> float:
    D = as_matrix(dm)
    _, value = _evaluate(D, sorted(set(int(c) for c in centers)), _weights(gaps, kind, D.shape[0]))
    return value


def assign_subareas(dm: MatrixLike, centers: Iterable[int], gaps: Sequence[float], kind: ActivationKind,
                    labels: Optional[Sequence[str]] = None) -> Partition:
    D = as_matrix(dm)
    kind = ActivationKind.parse(kind)
    ordered = sorted(set(int(c) for c in centers))
    check_center_count(len(ordered), D.shape[0])
    assignment, value = _evaluate(D, ordered, _weights(gaps, kind, D.shape[0]), labels)
    return Partition(centers=ordered, assignment=assignment, objective=value, activation=kind)


def _candidate_costs(D: np.ndarray, partition: Partition, weights: np.ndarray, weighted: bool):
    """Subarea sums for every candidate vertex (n x k) and the mask of candidates reaching all members."""
    n, k = D.shape[0], partition.k
    membership = np.zeros((n, k))
    membership[np.arange(n), partition.assignment] = 1.0

    finite = np.isfinite(D)
    D0 = np.where(finite, D, 0.0)
    column_weights = membership * (weights[:, None] if weighted else 1.0)
    costs = D0 @ column_weights
    misses = (~finite).astype(float) @ membership
    return costs, misses == 0


def update_centers(dm: MatrixLike, partition: Partition, gaps: Sequence[float], kind: ActivationKind,
                   weighted: bool = True) -> List[int]:
    """New center per subarea: the vertex with the smallest subarea sum.

    Ties keep the current center, then the lowest vertex id. A vertex already chosen for an
    earlier subarea is skipped so the number of centers never drops.
    """
    D = as_matrix(dm)
    weights = _weights(gaps, kind, D.shape[0])
    costs, eligible = _candidate_costs(D, partition, weights, weighted)
    sizes = partition.subarea_sizes()

    taken = np.zeros(D.shape[0], dtype=bool)
    chosen: List[int] = []
    for j, incumbent in enumerate(partition.centers):
        if sizes[j] == 0:
            pick = incumbent
            if taken[pick]:
                return list(partition.centers)
        else:
            mask = eligible[:, j] & ~taken
            if not mask.any():
                return list(partition.centers)
            column = np.where(mask, costs[:, j], np.inf)
            best = column.min()
            ties = np.flatnonzero(mask & (column <= best + _tolerance(best)))
            pick = incumbent if incumbent in ties else int(ties[0])
        taken[pick] = True
        chosen.append(int(pick))
    return chosen


def _initial_centers(n: int, k: int, seed: Optional[int]) -> List[int]:
    rng = np.random.default_rng(seed)
    return sorted(int(c) for c in rng.choice(n, size=k, replace=False))


def descend(
    dm: MatrixLike,
    k: int,
    gaps: Sequence[float],
    kind: ActivationKind,
    seed: Optional[int] = None,
    initial: Optional[Iterable[int]] = None,
    weighted: bool = True,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    labels: Optional[Sequence[str]] = None
) -> Partition:
    """Alternate assignment and center update until the objective stops decreasing."""
    D = as_matrix(dm)
    n = D.shape[0]
    kind = ActivationKind.parse(kind)
    check_center_count(k, n)

    if initial is not None:
        centers = sorted(set(int(c) for c in initial))
        if len(centers) != k:
            raise ValueError(f"Initial center set has {len(centers)} distinct vertices, expected {k}")
    else:
        centers = _initial_centers(n, k, seed)

    current = assign_subareas(D, centers, gaps, kind, labels)
    trace = [current.objective]
    evaluations = 1

    while evaluations < max_iterations:
        proposal = sorted(update_centers(D, current, gaps, kind, weighted))
        if proposal == current.centers:
            break
        candidate = assign_subareas(D, proposal, gaps, kind, labels)
        evaluations += 1
        if candidate.objective < current.objective - _tolerance(current.objective):
            current = candidate
            trace.append(candidate.objective)
        else:
            break
    else:
        logger.warning(f"Center search hit the iteration guard ({max_iterations}) at seed {seed}")

    current.iterations = evaluations
    current.seed = seed
    current.objective_trace = trace
    current.method = "dfda"
    current.stats = {'weighted_update': weighted, 'evaluations': evaluations}
    return current


def _all_pairs(g: RoadGraph, t: float, dm: Optional[MatrixLike]) -> MatrixLike:
    if dm is not None:
        return dm
    return distance_matrix(g, range(g.n_vertices), t)


def search_centers(
    g: RoadGraph,
    k: int,
    gaps: Sequence[float],
    kind: ActivationKind,
    seed: Optional[int],
    t: float,
    dm: Optional[MatrixLike] = None,
    initial: Optional[Iterable[int]] = None,
    weighted: bool = True,
    max_iterations: int = DEFAULT_MAX_ITERATIONS
) -> Partition:
    return descend(
        _all_pairs(g, t, dm), k, gaps, kind,
        seed=seed,
        initial=initial,
        weighted=weighted,
        max_iterations=max_iterations,
        labels=g.labels
    )


def best_partition(partitions: Iterable[Partition]) -> Partition:
    return min(partitions, key=lambda p: (p.objective, sorted(p.centers), p.seed if p.seed is not None else -1))


def multi_restart_search(
    g: RoadGraph,
    k: int,
    gaps: Sequence[float],
    kind: ActivationKind,
    seeds: Sequence[int],
    t: float,
    dm: Optional[MatrixLike] = None,
    weighted: bool = True,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    workers: int = 1
) -> Partition:
    seeds = list(seeds)
    if not seeds:
        raise ValueError("multi_restart_search needs at least one seed")
    D = as_matrix(_all_pairs(g, t, dm))

    def restart(seed: int) -> Partition:
        return descend(D, k, gaps, kind, seed=seed, weighted=weighted,
                       max_iterations=max_iterations, labels=g.labels)

    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            results = list(pool.map(restart, seeds))
    else:
        results = [restart(s) for s in seeds]

    best = best_partition(results)
    best.stats['restarts'] = len(seeds)
    best.stats['restart_objectives'] = [r.objective for r in results]
    logger.debug(
        f"{len(seeds)} restart(s), k={k}, {ActivationKind.parse(kind).value}: "
        f"best objective {best.objective:.1f} at seed {best.seed}"
    )
    return best


def brute_force_centers(
    g: Optional[RoadGraph],
    k: int,
    gaps: Sequence[float],
    kind: ActivationKind,
    t: float = 0.0,
    dm: Optional[MatrixLike] = None,
    cap: int = DEFAULT_ENUMERATION_CAP
) -> Partition:
    """Global minimum by enumerating every k-subset of vertices."""
    if dm is None:
        if g is None:
            raise ValueError("brute_force_centers needs a graph or a distance matrix")
        dm = _all_pairs(g, t, None)
    D = as_matrix(dm)
    n = D.shape[0]
    kind = ActivationKind.parse(kind)
    check_center_count(k, n)

    total = math.comb(n, k)
    if total > cap:
        raise EnumerationCapError(f"C({n},{k}) = {total} center sets exceeds the enumeration cap {cap}")

    weights = _weights(gaps, kind, n)
    best_value = np.inf
    best_centers: Optional[List[int]] = None
    skipped = 0
    for centers in combinations(range(n), k):
        try:
            _, value = _evaluate(D, centers, weights)
        except UnreachableVertexError:
            skipped += 1
            continue
        if best_centers is None or value < best_value - _tolerance(best_value):
            best_value = value
            best_centers = list(centers)

    labels = g.labels if g is not None else None
    if best_centers is None:
        # no center set reaches everything; surface the first stranded vertex
        _evaluate(D, list(range(n - k, n)), weights, labels)
    if skipped:
        logger.warning(f"{skipped} of {total} center sets leave some vertex unreachable")

    partition = assign_subareas(D, best_centers, gaps, kind, labels)
    partition.method = "brute_force"
    partition.iterations = total
    partition.objective_trace = [partition.objective]
    partition.stats = {'enumerated': total, 'skipped': skipped}
    return partition


def subarea_cost(dm: MatrixLike, partition: Partition, gaps: Optional[Sequence[float]] = None,
                 kind: ActivationKind = ActivationKind.IGNORE) -> float:
    """Cost of a given partition: each non-center vertex priced from its own subarea's center."""
    D = as_matrix(dm)
    n = D.shape[0]
    weights = _weights(np.zeros(n) if gaps is None else gaps, kind, n)
    centers = np.asarray(partition.centers)[partition.assignment]
    times = D[centers, np.arange(n)]
    others = np.arange(n) != centers
    if not np.all(np.isfinite(times[others])):
        return float('inf')
    return float(np.sum(times[others] * weights[others]))
