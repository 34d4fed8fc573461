"""
Road Graph Loading and Queries
Builds the directed road graph from node/edge tables and answers travel-time queries

Travel times are frozen at the slot containing the query time for the whole path.
Single-source rows are memoised per slot in the graph's route cache.
"""

import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from src.errors import GraphParseError, GraphValidationError
from src.models.graph import DistanceMatrix, RoadGraph

logger = logging.getLogger('road_graph')

TableLike = Union[str, Path, pd.DataFrame]

NODE_COLUMNS = ('node_id', 'x_m', 'y_m')
SLOT_COLUMN = re.compile(r'^slot_(\d+)$')
DEFAULT_REFERENCE_SPEED_MPS = 8.33
ALL_PAIRS_THRESHOLD = 256


def _read_table(records: TableLike, what: str) -> Tuple[pd.DataFrame, str]:
    if isinstance(records, pd.DataFrame):
        return records.astype(str), f"<{what}>"
    path = Path(records)
    if not path.exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise GraphParseError(f"malformed CSV: {e}", source=str(path)) from e
    return frame, str(path)


def _parse_float(value: str, column: str, line: int, source: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise GraphParseError(f"column {column!r}: cannot parse {value!r} as a number", line=line, source=source) from None


def load_graph(
    node_records: TableLike,
    edge_records: TableLike,
    slot_length: float = 3600.0,
    l_max: float = 200.0,
    reference_speed_mps: float = DEFAULT_REFERENCE_SPEED_MPS
) -> RoadGraph:
    if slot_length <= 0:
        raise GraphValidationError(f"slot_length must be positive, got {slot_length}")

    nodes, node_source = _read_table(node_records, 'node')
    missing = [c for c in NODE_COLUMNS if c not in nodes.columns]
    if missing:
        raise GraphParseError(f"node header must be {','.join(NODE_COLUMNS)}; missing {missing}", line=1, source=node_source)

    labels: List[str] = []
    coords: List[Tuple[float, float]] = []
    seen: Dict[str, int] = {}
    for i, row in enumerate(nodes.itertuples(index=False)):
        line = i + 2
        record = row._asdict()
        label = str(record['node_id']).strip()
        if not label:
            raise GraphParseError("empty node_id", line=line, source=node_source)
        if label in seen:
            raise GraphValidationError(f"{node_source}:{line}: duplicate node_id {label!r} (first on line {seen[label]})")
        seen[label] = line
        x = _parse_float(record['x_m'], 'x_m', line, node_source)
        y = _parse_float(record['y_m'], 'y_m', line, node_source)
        labels.append(label)
        coords.append((x, y))

    index = {label: i for i, label in enumerate(labels)}

    edges, edge_source = _read_table(edge_records, 'edge')
    if 'from' not in edges.columns or 'to' not in edges.columns:
        raise GraphParseError("edge header must start with from,to", line=1, source=edge_source)

    slot_columns = sorted(
        (int(m.group(1)), c) for c in edges.columns if (m := SLOT_COLUMN.match(c))
    )
    if not slot_columns:
        raise GraphParseError("edge header needs at least one slot_<i> column", line=1, source=edge_source)
    if [s for s, _ in slot_columns] != list(range(len(slot_columns))):
        raise GraphParseError("slot columns must be slot_0..slot_<n-1> without gaps", line=1, source=edge_source)
    slot_names = [c for _, c in slot_columns]
    has_length = 'length_m' in edges.columns

    best: Dict[Tuple[int, int], Tuple[np.ndarray, float]] = {}
    duplicates = 0
    self_loops = 0
    for i, row in enumerate(edges.to_dict('records')):
        line = i + 2
        u_label = str(row['from']).strip()
        v_label = str(row['to']).strip()
        if u_label not in index or v_label not in index:
            dangling = u_label if u_label not in index else v_label
            raise GraphValidationError(f"{edge_source}:{line}: edge endpoint {dangling!r} is not a declared node")

        times = np.array([_parse_float(row[c], c, line, edge_source) for c in slot_names])
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise GraphValidationError(f"{edge_source}:{line}: travel times must be positive and finite, got {times.tolist()}")

        if has_length and str(row['length_m']).strip():
            length = _parse_float(row['length_m'], 'length_m', line, edge_source)
            if not np.isfinite(length) or length <= 0:
                raise GraphValidationError(f"{edge_source}:{line}: length_m must be positive, got {length}")
        else:
            length = float(times.min()) * reference_speed_mps

        u, v = index[u_label], index[v_label]
        if u == v:
            self_loops += 1
            continue

        key = (u, v)
        if key in best:
            duplicates += 1
            old_times, old_length = best[key]
            best[key] = (np.minimum(old_times, times), min(old_length, length))
        else:
            best[key] = (times, length)

    if duplicates:
        logger.warning(f"{edge_source}: {duplicates} duplicate directed edge(s), kept minimum travel times")
    if self_loops:
        logger.warning(f"{edge_source}: dropped {self_loops} self-loop edge(s)")

    keys = sorted(best)
    n_slots = len(slot_names)
    edge_from = np.array([u for u, _ in keys], dtype=np.int64)
    edge_to = np.array([v for _, v in keys], dtype=np.int64)
    edge_times = np.array([best[k][0] for k in keys], dtype=float).reshape(len(keys), n_slots)
    edge_length = np.array([best[k][1] for k in keys], dtype=float)

    graph = RoadGraph(
        labels=labels,
        coords=np.array(coords, dtype=float).reshape(-1, 2),
        edge_from=edge_from,
        edge_to=edge_to,
        edge_times=edge_times,
        edge_length_m=edge_length,
        slot_length=float(slot_length),
        l_max=float(l_max)
    )
    logger.info(f"Loaded road graph: {graph.n_vertices} vertices, {graph.n_edges} edges, {n_slots} slot(s)")
    return graph


def write_graph(g: RoadGraph, nodes_path: Union[str, Path], edges_path: Union[str, Path]):
    nodes = pd.DataFrame({
        'node_id': g.labels,
        'x_m': g.coords[:, 0],
        'y_m': g.coords[:, 1]
    })
    nodes.to_csv(nodes_path, index=False)

    edges = pd.DataFrame({
        'from': [g.labels[u] for u in g.edge_from],
        'to': [g.labels[v] for v in g.edge_to]
    })
    for s in range(g.n_slots):
        edges[f'slot_{s}'] = g.edge_times[:, s]
    edges['length_m'] = g.edge_length_m
    edges.to_csv(edges_path, index=False)


def _rows(g: RoadGraph, vertices: Sequence[int], slot: int, direction: str) -> Tuple[np.ndarray, np.ndarray]:
    cache = g.route_cache
    wanted = [int(v) for v in vertices]
    missing = list(dict.fromkeys(cache.missing(direction, slot, wanted)))
    if missing:
        adjacency = g.adjacency(slot, reverse=(direction == 'to'))
        dist, pred = csgraph.dijkstra(adjacency, directed=True, indices=missing, return_predecessors=True)
        for i, v in enumerate(missing):
            cache.put(direction, slot, v, (dist[i], pred[i]))

    dists = []
    preds = []
    for v in wanted:
        row = cache.get(direction, slot, v)
        if row is None:
            # evicted between compute and read under memory pressure
            adjacency = g.adjacency(slot, reverse=(direction == 'to'))
            d, p = csgraph.dijkstra(adjacency, directed=True, indices=[v], return_predecessors=True)
            row = (d[0], p[0])
        dists.append(row[0])
        preds.append(row[1])
    n = g.n_vertices
    return np.array(dists).reshape(len(wanted), n), np.array(preds).reshape(len(wanted), n)


def travel_time(g: RoadGraph, origin: int, dest: int, t: float) -> float:
    g.check_vertex(origin)
    g.check_vertex(dest)
    if origin == dest:
        return 0.0
    dist, _ = _rows(g, [origin], g.slot_at(t), 'from')
    return float(dist[0, dest])


def distance_matrix(g: RoadGraph, sources: Iterable[int], t: float) -> DistanceMatrix:
    ordered = list(dict.fromkeys(int(s) for s in sources))
    if not ordered:
        raise ValueError("distance_matrix needs at least one source")
    for s in ordered:
        g.check_vertex(s)

    slot = g.slot_at(t)
    if len(ordered) > ALL_PAIRS_THRESHOLD:
        values = csgraph.dijkstra(g.adjacency(slot), directed=True, indices=ordered)
    else:
        values, _ = _rows(g, ordered, slot, 'from')
    values = np.asarray(values, dtype=float).reshape(len(ordered), g.n_vertices)
    values[np.arange(len(ordered)), ordered] = 0.0
    return DistanceMatrix(sources=ordered, values=values, query_time=float(t))


def reverse_distance_matrix(g: RoadGraph, targets: Iterable[int], t: float, limit: Optional[float] = None) -> DistanceMatrix:
    """Rows hold the time from every vertex to each target."""
    ordered = list(dict.fromkeys(int(v) for v in targets))
    for v in ordered:
        g.check_vertex(v)
    if not ordered:
        return DistanceMatrix(sources=[], values=np.zeros((0, g.n_vertices)), query_time=float(t))

    slot = g.slot_at(t)
    if limit is not None:
        values = csgraph.dijkstra(g.adjacency(slot, reverse=True), directed=True, indices=ordered, limit=limit)
    else:
        values, _ = _rows(g, ordered, slot, 'to')
    values = np.asarray(values, dtype=float).reshape(len(ordered), g.n_vertices)
    return DistanceMatrix(sources=ordered, values=values, query_time=float(t))


def shortest_path(g: RoadGraph, origin: int, dest: int, t: float) -> Optional[List[int]]:
    g.check_vertex(origin)
    g.check_vertex(dest)
    if origin == dest:
        return [origin]
    dist, pred = _rows(g, [origin], g.slot_at(t), 'from')
    if not np.isfinite(dist[0, dest]):
        return None

    path = [dest]
    current = dest
    while current != origin:
        current = int(pred[0, current])
        if current < 0:
            return None
        path.append(current)
    path.reverse()
    return path


def path_km(g: RoadGraph, origin: int, dest: int, t: float) -> float:
    path = shortest_path(g, origin, dest, t)
    if path is None:
        return float('inf')
    meters = sum(g.edge_length(u, v) for u, v in zip(path, path[1:]))
    return meters / 1000.0


def _tree(g: RoadGraph) -> cKDTree:
    if g._tree is None:
        with g._lock:
            if g._tree is None:
                g._tree = cKDTree(g.coords)
    return g._tree


def snap_point(g: RoadGraph, coordinate: Sequence[float], l_max: Optional[float] = None) -> Optional[int]:
    radius = (g.l_max if l_max is None else l_max) / 2.0
    if radius <= 0:
        raise ValueError(f"l_max must be positive, got {radius * 2}")
    if g.n_vertices == 0:
        return None
    distance, vertex = _tree(g).query(np.asarray(coordinate, dtype=float))
    if distance <= radius:
        return int(vertex)
    return None


def snap_points(g: RoadGraph, coordinates: np.ndarray, l_max: Optional[float] = None) -> np.ndarray:
    radius = (g.l_max if l_max is None else l_max) / 2.0
    coordinates = np.asarray(coordinates, dtype=float).reshape(-1, 2)
    if g.n_vertices == 0 or len(coordinates) == 0:
        return np.full(len(coordinates), -1, dtype=np.int64)
    distances, vertices = _tree(g).query(coordinates)
    return np.where(distances <= radius, vertices, -1).astype(np.int64)
