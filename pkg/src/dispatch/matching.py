"""
Bipartite Matching
Hopcroft-Karp maximum matching and the request/relocation graph builders
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.models.graph import RoadGraph
from src.models.trip import TripRequest
from src.models.vehicle import Vehicle
from src.routing.road_graph import reverse_distance_matrix

logger = logging.getLogger('matching')

UNSET = -1


@dataclass(frozen=True)
class Candidate:
    """A vehicle that can be dispatched: it is at `vertex` (or will be) from `ready_at` on."""
    id: int
    vertex: int
    ready_at: float


@dataclass(frozen=True)
class RelocationSlot:
    subarea: int
    center: int


@dataclass
class BipartiteGraph:
    left: List[int] = field(default_factory=list)
    right: List[int] = field(default_factory=list)
    adjacency: Dict[int, List[int]] = field(default_factory=dict)
    costs: Dict[Tuple[int, int], float] = field(default_factory=dict)
    right_meta: Dict[int, RelocationSlot] = field(default_factory=dict)

    def add_edge(self, left: int, right: int, cost: float = 0.0):
        key = (left, right)
        if key in self.costs:
            self.costs[key] = min(self.costs[key], cost)
            return
        self.adjacency.setdefault(left, []).append(right)
        self.costs[key] = cost

    @property
    def n_edges(self) -> int:
        return len(self.costs)

    def edges(self) -> List[Tuple[int, int]]:
        return sorted(self.costs)

    def ordered_adjacency(self) -> Dict[int, List[int]]:
        """Left vertices in id order, each with neighbours sorted by (cost, right id)."""
        return {
            left: sorted(self.adjacency.get(left, []), key=lambda r: (self.costs[(left, r)], r))
            for left in sorted(set(self.left) | set(self.adjacency))
        }


@dataclass
class Matching:
    pairs: Dict[int, int] = field(default_factory=dict)
    phases: int = 0

    @property
    def cardinality(self) -> int:
        return len(self.pairs)

    def sorted_pairs(self) -> List[Tuple[int, int]]:
        return sorted(self.pairs.items())


class HopcroftKarp:
    """Hopcroft-Karp over a left -> ordered right adjacency.

    Layers are built by BFS from free left vertices; augmenting paths are found with an
    explicit-stack DFS so deep alternating paths never hit the recursion limit.
    """

    def __init__(self, graph_left: Dict[int, List[int]]):
        self._graph_left = graph_left
        self._left: List[int] = list(graph_left.keys())
        self._pair_left: Dict[int, int] = {}
        self._pair_right: Dict[int, int] = {}
        self._dist_left: Dict[int, int] = {}
        self._reference_distance: int = UNSET
        self.phases = 0

    def run(self) -> Dict[int, int]:
        for left in self._left:
            self._dist_left[left] = UNSET
        while self._bfs():
            self.phases += 1
            for left in self._left:
                if left not in self._pair_left:
                    self._dfs(left)
        return dict(self._pair_left)

    def _bfs(self) -> bool:
        queue: Deque[int] = deque()
        for left in self._left:
            if left not in self._pair_left:
                queue.append(left)
                self._dist_left[left] = 0
            else:
                self._dist_left[left] = UNSET
        self._reference_distance = UNSET

        while queue:
            left = queue.popleft()
            if self._reference_distance != UNSET and self._dist_left[left] >= self._reference_distance:
                continue
            for right in self._graph_left[left]:
                other = self._pair_right.get(right)
                if other is None:
                    if self._reference_distance == UNSET:
                        self._reference_distance = self._dist_left[left] + 1
                elif self._dist_left[other] == UNSET:
                    self._dist_left[other] = self._dist_left[left] + 1
                    queue.append(other)
        return self._reference_distance != UNSET

    def _dfs(self, root: int) -> bool:
        stack = [(root, iter(self._graph_left[root]))]
        via: List[int] = []
        while stack:
            left, neighbours = stack[-1]
            descended = False
            for right in neighbours:
                other = self._pair_right.get(right)
                if other is None:
                    if self._reference_distance == self._dist_left[left] + 1:
                        via.append(right)
                        for (l, _), r in zip(stack, via):
                            self._pair_left[l] = r
                            self._pair_right[r] = l
                        return True
                elif self._dist_left[other] == self._dist_left[left] + 1:
                    via.append(right)
                    stack.append((other, iter(self._graph_left[other])))
                    descended = True
                    break
            if not descended:
                self._dist_left[left] = UNSET
                stack.pop()
                if via:
                    via.pop()
        return False


def max_bipartite_matching(bg: BipartiteGraph) -> Matching:
    solver = HopcroftKarp(bg.ordered_adjacency())
    pairs = solver.run()
    return Matching(pairs=pairs, phases=solver.phases)


def as_candidates(vehicles: Iterable[Union[Vehicle, Candidate]], t: float) -> List[Candidate]:
    candidates = []
    for v in vehicles:
        if isinstance(v, Candidate):
            candidates.append(v)
        elif v.is_free:
            candidates.append(Candidate(id=v.id, vertex=v.location, ready_at=t))
    return candidates


def _arrival_times(g: RoadGraph, candidates: Sequence[Candidate], targets: Sequence[int], t: float,
                   limit: Optional[float]) -> np.ndarray:
    """(targets x candidates) seconds from t until each candidate could reach each target."""
    if not candidates or not targets:
        return np.zeros((len(targets), len(candidates)))
    rows = reverse_distance_matrix(g, targets, t, limit=limit)
    vertices = np.array([c.vertex for c in candidates], dtype=np.int64)
    offsets = np.array([max(0.0, c.ready_at - t) for c in candidates])
    return rows.rows(targets)[:, vertices] + offsets[None, :]


def build_request_vehicle_graph(
    requests: Sequence[TripRequest],
    vehicles: Iterable[Union[Vehicle, Candidate]],
    g: RoadGraph,
    max_wait: float,
    t: float
) -> BipartiteGraph:
    """Edge (request, vehicle) when the vehicle can reach the pickup before the request's wait runs out.

    The remaining budget is t_p + max_wait - t, i.e. max_wait for a request made at t.
    """
    candidates = as_candidates(vehicles, t)
    bg = BipartiteGraph(left=[r.id for r in requests], right=[c.id for c in candidates])
    if not requests or not candidates:
        return bg

    pickups = sorted({r.pickup for r in requests})
    arrival = _arrival_times(g, candidates, pickups, t, limit=None)
    row_of = {p: i for i, p in enumerate(pickups)}
    for r in requests:
        budget = r.request_time + max_wait - t
        if budget < 0:
            continue
        times = arrival[row_of[r.pickup]]
        for col in np.flatnonzero(times <= budget):
            bg.add_edge(r.id, candidates[col].id, float(times[col]))
    return bg


def build_relocation_graph(
    idle: Iterable[Union[Vehicle, Candidate]],
    demands: Sequence[Tuple[int, int, float]],
    g: RoadGraph,
    relocation_horizon: float,
    t: float
) -> BipartiteGraph:
    """Edges from idle vehicles to relocation slots reachable within the horizon.

    `demands` lists (subarea, center, region gap); each positive gap opens ceil(gap) slots at its center.
    """
    candidates = as_candidates(idle, t)
    bg = BipartiteGraph(left=[c.id for c in candidates])

    slot = 0
    for subarea, center, gap in demands:
        if gap <= 0:
            continue
        for _ in range(int(math.ceil(gap))):
            bg.right.append(slot)
            bg.right_meta[slot] = RelocationSlot(subarea=int(subarea), center=int(center))
            slot += 1
    if not bg.right or not candidates:
        return bg

    centers = sorted({meta.center for meta in bg.right_meta.values()})
    arrival = _arrival_times(g, candidates, centers, t, limit=relocation_horizon)
    row_of = {c: i for i, c in enumerate(centers)}
    for right in bg.right:
        times = arrival[row_of[bg.right_meta[right].center]]
        for col in np.flatnonzero(times <= relocation_horizon):
            bg.add_edge(candidates[col].id, right, float(times[col]))
    return bg


def surplus_vehicles(
    free_by_subarea: Dict[int, List[Tuple[int, float]]],
    region_gaps: Sequence[float]
) -> List[int]:
    """Vehicles offered for relocation from over-supplied subareas.

    Each subarea j with a negative gap offers at most floor(-gap_j) of its free vehicles, given
    as (vehicle id, time to the nearest under-supplied center); nearer vehicles go first.
    """
    offered: List[int] = []
    for j, gap in enumerate(region_gaps):
        if gap >= 0:
            continue
        pool = sorted(free_by_subarea.get(j, []), key=lambda item: (item[1], item[0]))
        surplus = min(len(pool), int(math.floor(-gap)))
        offered.extend(vehicle for vehicle, _ in pool[:surplus])
    return sorted(offered)
