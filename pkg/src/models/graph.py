"""
Road Graph Models
Directed, time-sloted road graph and distance matrices
"""

import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from src.routing.cache import RouteCache

SECONDS_PER_DAY = 86400.0
UNREACHABLE = np.inf


def slot_index(t: float, slot_length: float, n_slots: int) -> int:
    if n_slots <= 1:
        return 0
    time_of_day = float(t) % SECONDS_PER_DAY
    return int(time_of_day // slot_length) % n_slots


@dataclass
class RoadGraph:
    labels: List[str]
    coords: np.ndarray
    edge_from: np.ndarray
    edge_to: np.ndarray
    edge_times: np.ndarray
    edge_length_m: np.ndarray
    slot_length: float
    l_max: float = 200.0

    _adjacency: Dict[Tuple[int, bool], sparse.csr_matrix] = field(default_factory=dict, init=False, repr=False, compare=False)
    _lengths: Optional[Dict[Tuple[int, int], float]] = field(default=None, init=False, repr=False, compare=False)
    _label_index: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)
    _tree: object = field(default=None, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)
    route_cache: RouteCache = field(default_factory=RouteCache, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.edge_from = np.asarray(self.edge_from, dtype=np.int64)
        self.edge_to = np.asarray(self.edge_to, dtype=np.int64)
        times = np.asarray(self.edge_times, dtype=float)
        if times.ndim != 2:
            times = times.reshape(len(self.edge_from), -1) if len(self.edge_from) else times.reshape(0, 1)
        self.edge_times = times
        self.edge_length_m = np.asarray(self.edge_length_m, dtype=float)
        self._label_index = {label: i for i, label in enumerate(self.labels)}

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return int(len(self.edge_from))

    @property
    def n_slots(self) -> int:
        return max(1, int(self.edge_times.shape[1]))

    def slot_at(self, t: float) -> int:
        return slot_index(t, self.slot_length, self.n_slots)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise KeyError(f"Unknown vertex label {label!r}") from None

    def check_vertex(self, vertex: int):
        if not 0 <= int(vertex) < self.n_vertices:
            raise IndexError(f"Vertex id {vertex} out of range 0..{self.n_vertices - 1}")

    def adjacency(self, slot: int, reverse: bool = False) -> sparse.csr_matrix:
        key = (slot, reverse)
        matrix = self._adjacency.get(key)
        if matrix is not None:
            return matrix

        with self._lock:
            matrix = self._adjacency.get(key)
            if matrix is None:
                n = self.n_vertices
                weights = self.edge_times[:, slot] if self.n_edges else np.zeros(0)
                rows, cols = (self.edge_to, self.edge_from) if reverse else (self.edge_from, self.edge_to)
                matrix = sparse.csr_matrix((weights, (rows, cols)), shape=(n, n))
                self._adjacency[key] = matrix
        return matrix

    def edge_length(self, u: int, v: int) -> float:
        if self._lengths is None:
            with self._lock:
                if self._lengths is None:
                    self._lengths = {
                        (int(a), int(b)): float(length)
                        for a, b, length in zip(self.edge_from, self.edge_to, self.edge_length_m)
                    }
        return self._lengths[(u, v)]

    def summary(self) -> dict:
        return {
            'vertices': self.n_vertices,
            'edges': self.n_edges,
            'slots': self.n_slots,
            'slot_length': self.slot_length,
            'l_max': self.l_max
        }


@dataclass
class DistanceMatrix:
    sources: List[int]
    values: np.ndarray
    query_time: float
    _source_index: Dict[int, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.sources = [int(s) for s in self.sources]
        self.values = np.asarray(self.values, dtype=float)
        self._source_index = {s: i for i, s in enumerate(self.sources)}

    @property
    def n_targets(self) -> int:
        return int(self.values.shape[1])

    def row(self, source: int) -> np.ndarray:
        return self.values[self._source_index[int(source)]]

    def rows(self, sources: Sequence[int]) -> np.ndarray:
        return self.values[[self._source_index[int(s)] for s in sources]]

    def __getitem__(self, key: Tuple[int, int]) -> float:
        source, target = key
        return float(self.values[self._source_index[int(source)], int(target)])

    def is_complete(self) -> bool:
        return len(self.sources) == self.n_targets and self.sources == list(range(self.n_targets))
