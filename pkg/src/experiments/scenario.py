"""
Synthetic Scenarios
Grid road graphs, imbalanced trip tables and small random search instances
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from src.models.config import SCHEMA_VERSION
from src.models.demand import SECONDS_PER_DAY
from src.models.graph import RoadGraph
from src.routing.road_graph import load_graph, write_graph

logger = logging.getLogger('experiments')

DEFAULT_START = 1704672000.0  # 2024-01-08 00:00 UTC, a Monday
SURGE_STREAM = 10_000


def grid_graph(
    rows: int,
    cols: int,
    edge_seconds: float = 60.0,
    spacing_m: float = 500.0,
    slot_multipliers: Optional[Sequence[float]] = None,
    seed: int = 0,
    jitter: float = 0.0
) -> RoadGraph:
    """Bidirectional grid; each direction gets its own integer travel time when jitter > 0."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs at least one row and column, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    multipliers = np.asarray(slot_multipliers if slot_multipliers is not None else [1.0], dtype=float)

    labels = [f"r{r}c{c}" for r in range(rows) for c in range(cols)]
    nodes = pd.DataFrame({
        'node_id': labels,
        'x_m': [c * spacing_m for r in range(rows) for c in range(cols)],
        'y_m': [r * spacing_m for r in range(rows) for c in range(cols)]
    })

    pairs: List[Tuple[int, int]] = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                pairs += [(v, v + 1), (v + 1, v)]
            if r + 1 < rows:
                pairs += [(v, v + cols), (v + cols, v)]

    base = np.full(len(pairs), float(edge_seconds))
    if jitter > 0 and pairs:
        base = np.round(base * (1.0 + jitter * rng.random(len(pairs))))
    edges = pd.DataFrame({
        'from': [labels[u] for u, _ in pairs],
        'to': [labels[v] for _, v in pairs]
    })
    for s, factor in enumerate(multipliers):
        edges[f'slot_{s}'] = np.maximum(1.0, np.round(base * factor))
    edges['length_m'] = spacing_m

    slot_length = SECONDS_PER_DAY / len(multipliers)
    return load_graph(nodes, edges, slot_length=slot_length)


def _neighbourhood(g: RoadGraph, hotspots: Sequence[int]) -> np.ndarray:
    members = set(int(h) for h in hotspots)
    for u, v in zip(g.edge_from, g.edge_to):
        if int(u) in hotspots:
            members.add(int(v))
    return np.array(sorted(members), dtype=np.int64)


def imbalanced_trips(
    g: RoadGraph,
    start: float,
    duration: float,
    n_requests: int,
    hotspots: Sequence[int],
    hotspot_share: float = 0.7,
    seed: int = 0
) -> pd.DataFrame:
    """Pickups concentrated around the hotspots, dropoffs uniform over the graph."""
    n = g.n_vertices
    if n < 2:
        raise ValueError("imbalanced_trips needs at least two vertices")
    rng = np.random.default_rng(seed)
    area = _neighbourhood(g, hotspots)

    times = np.sort(np.floor(start + rng.random(n_requests) * duration))
    concentrated = rng.random(n_requests) < hotspot_share
    pickups = np.where(concentrated, area[rng.integers(0, len(area), n_requests)], rng.integers(0, n, n_requests))
    dropoffs = (pickups + 1 + rng.integers(0, n - 1, n_requests)) % n

    return pd.DataFrame({
        'request_time': times.astype(np.int64),
        'pickup_node': [g.labels[v] for v in pickups],
        'dropoff_node': [g.labels[v] for v in dropoffs]
    })


@dataclass
class Scenario:
    graph: RoadGraph
    history: pd.DataFrame
    trips: pd.DataFrame
    start: float
    duration: float
    hotspots: List[int] = field(default_factory=list)
    history_days: int = 7

    @property
    def all_trips(self) -> pd.DataFrame:
        return pd.concat([self.history, self.trips], ignore_index=True)


def _day_trips(g: RoadGraph, start: float, duration: float, n_requests: int, hotspots: Sequence[int],
               hotspot_share: float, surge: Optional[Tuple[float, float, int, float]], seed: int) -> pd.DataFrame:
    day = imbalanced_trips(g, start, duration, n_requests, hotspots, hotspot_share, seed)
    if surge is None:
        return day
    offset, length, count, share = surge
    burst = imbalanced_trips(g, start + offset, length, count, hotspots, share, seed + SURGE_STREAM)
    merged = pd.concat([day, burst], ignore_index=True)
    return merged.sort_values('request_time', kind='mergesort', ignore_index=True)


def build_scenario(
    rows: int = 10,
    cols: int = 10,
    n_requests: int = 600,
    duration: float = 7200.0,
    history_days: int = 7,
    start: float = DEFAULT_START + 8 * 3600,
    hotspot_share: float = 0.8,
    hotspots: Optional[Sequence[int]] = None,
    edge_seconds: float = 60.0,
    surge_requests: int = 0,
    surge_offset: float = 3600.0,
    surge_length: float = 1200.0,
    surge_share: float = 0.9,
    seed: int = 0
) -> Scenario:
    """A simulated window plus the same demand pattern on each of the prior days.

    `n_requests` spread over the window with `hotspot_share` of pickups near the hotspots; a
    surge adds `surge_requests` more in [start + surge_offset, start + surge_offset + surge_length)
    with `surge_share` of them near the hotspots.
    """
    g = grid_graph(rows, cols, edge_seconds=edge_seconds)
    if hotspots is None:
        hotspots = [0, 1, cols, cols + 1][:g.n_vertices]
    surge = None
    if surge_requests > 0:
        if surge_offset < 0 or surge_length <= 0 or surge_offset + surge_length > duration:
            raise ValueError(
                f"surge [{surge_offset}, {surge_offset + surge_length}) does not fit a {duration}s window"
            )
        surge = (surge_offset, surge_length, surge_requests, surge_share)

    days = [
        _day_trips(g, start - d * SECONDS_PER_DAY, duration, n_requests, hotspots, hotspot_share, surge, seed + d)
        for d in range(history_days, 0, -1)
    ]
    history = pd.concat(days, ignore_index=True) if days else imbalanced_trips(g, start, duration, 0, hotspots)
    trips = _day_trips(g, start, duration, n_requests, hotspots, hotspot_share, surge, seed)
    logger.info(
        f"Built scenario: {g.n_vertices} vertices, {len(trips)} request(s) "
        f"({surge_requests} in the surge), {len(history)} history trip(s) over {history_days} day(s)"
    )
    return Scenario(
        graph=g,
        history=history,
        trips=trips,
        start=float(start),
        duration=float(duration),
        hotspots=[int(h) for h in hotspots],
        history_days=history_days
    )


def write_scenario(scenario: Scenario, out_dir: Union[str, Path], n_vehicles: int = 40, k: int = 4) -> dict:
    """Writes nodes.csv, edges.csv, trips.csv and a config.yaml that runs them; returns the paths."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    paths = {
        'nodes': out / 'nodes.csv',
        'edges': out / 'edges.csv',
        'trips': out / 'trips.csv',
        'config': out / 'config.yaml'
    }
    write_graph(scenario.graph, paths['nodes'], paths['edges'])
    scenario.all_trips.to_csv(paths['trips'], index=False)

    config = {
        'schema_version': SCHEMA_VERSION,
        'name': 'synthetic-imbalance',
        'history_days': scenario.history_days,
        'paths': {
            'nodes': str(paths['nodes']),
            'edges': str(paths['edges']),
            'trips': str(paths['trips']),
            'out_dir': str(out / 'results')
        },
        'sim': {
            'n_vehicles': n_vehicles,
            'k': k,
            'start': float(scenario.start),
            'duration': float(scenario.duration),
            'slot_length': float(scenario.graph.slot_length)
        },
        'sweep': {
            'methods': ['dfda', 'fda', 'none'],
            'activations': ['relu']
        }
    }
    with open(paths['config'], 'w', encoding='utf-8') as f:
        yaml.safe_dump(config, f, sort_keys=False)

    logger.info(f"Wrote scenario files to {out}")
    return {key: str(path) for key, path in paths.items()}


def random_instance(n: int, k: int, seed: int, max_time: int = 20, gap_range: int = 5,
                    extra_edges: Optional[int] = None) -> Tuple[RoadGraph, np.ndarray]:
    """Strongly connected graph with asymmetric integer travel times and integer gaps."""
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"random_instance needs 1 <= k <= n, got n={n}, k={k}")
    rng = np.random.default_rng(seed)

    order = rng.permutation(n)
    pairs = {(int(order[i]), int(order[(i + 1) % n])) for i in range(n)} if n > 1 else set()
    extra = extra_edges if extra_edges is not None else 2 * n
    for _ in range(extra):
        u, v = (int(x) for x in rng.integers(0, n, 2))
        if u != v:
            pairs.add((u, v))
    pairs = sorted(pairs)

    labels = [f"v{i}" for i in range(n)]
    nodes = pd.DataFrame({'node_id': labels, 'x_m': np.arange(n) * 100.0, 'y_m': np.zeros(n)})
    edges = pd.DataFrame({
        'from': [labels[u] for u, _ in pairs],
        'to': [labels[v] for _, v in pairs],
        'slot_0': rng.integers(1, max_time + 1, len(pairs)).astype(float),
        'length_m': 100.0
    })
    gaps = rng.integers(-gap_range, gap_range + 1, n).astype(float)
    return load_graph(nodes, edges), gaps
