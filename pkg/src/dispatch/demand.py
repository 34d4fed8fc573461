"""
Demand Prediction
Trip ingestion, historical-average point demand and supply-demand gaps
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.models.demand import SECONDS_PER_DAY, DayType, DemandProfile, day_index
from src.models.graph import RoadGraph
from src.models.partition import Partition
from src.models.trip import TripStore
from src.routing.road_graph import snap_points

logger = logging.getLogger('demand')

TableLike = Union[str, Path, pd.DataFrame]

DROP_PARSE = 'parse_error'
DROP_UNKNOWN_NODE = 'unknown_node'
DROP_OUTSIDE = 'outside_snap_radius'
DROP_SAME_VERTEX = 'same_vertex'
MAX_REPORTED_ERRORS = 20


def _parse_times(column: pd.Series) -> np.ndarray:
    numeric = pd.to_numeric(column, errors='coerce').to_numpy(dtype=float)
    pending = np.isnan(numeric)
    if pending.any():
        parsed = pd.to_datetime(column[pending], utc=True, errors='coerce', format='ISO8601')
        seconds = np.full(len(parsed), np.nan)
        valid = parsed.notna().to_numpy()
        seconds[valid] = (parsed[valid] - pd.Timestamp(0, tz='UTC')).dt.total_seconds().to_numpy()
        numeric[pending] = seconds
    return numeric


def _locate(frame: pd.DataFrame, prefix: str, g: RoadGraph, l_max: Optional[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vertex per row (-1 when unresolved) plus masks of unparseable and unmatched rows."""
    n = len(frame)
    node_column = f'{prefix}_node'
    if node_column in frame.columns:
        labels = frame[node_column].astype(str).str.strip()
        index = {label: i for i, label in enumerate(g.labels)}
        vertices = labels.map(index).fillna(-1).to_numpy(dtype=np.int64)
        bad = (labels == '').to_numpy()
        unmatched = (vertices < 0) & ~bad
        return vertices, bad, unmatched

    x = pd.to_numeric(frame[f'{prefix}_x'], errors='coerce').to_numpy(dtype=float)
    y = pd.to_numeric(frame[f'{prefix}_y'], errors='coerce').to_numpy(dtype=float)
    bad = ~(np.isfinite(x) & np.isfinite(y))
    vertices = np.full(n, -1, dtype=np.int64)
    ok = ~bad
    if ok.any():
        vertices[ok] = snap_points(g, np.column_stack([x[ok], y[ok]]), l_max)
    unmatched = (vertices < 0) & ~bad
    return vertices, bad, unmatched


def ingest_trips(records: TableLike, g: RoadGraph, l_max: Optional[float] = None) -> TripStore:
    if isinstance(records, pd.DataFrame):
        frame = records.astype(str)
        source = '<trips>'
    else:
        path = Path(records)
        if not path.exists():
            raise FileNotFoundError(f"trip file not found: {path}")
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
        source = str(path)

    if 'request_time' not in frame.columns:
        raise ValueError(f"{source}: trip header needs a request_time column")
    for prefix in ('pickup', 'dropoff'):
        has_node = f'{prefix}_node' in frame.columns
        has_xy = f'{prefix}_x' in frame.columns and f'{prefix}_y' in frame.columns
        if not has_node and not has_xy:
            raise ValueError(f"{source}: trip header needs {prefix}_node or {prefix}_x,{prefix}_y")

    times = _parse_times(frame['request_time'])
    pickups, bad_pk, far_pk = _locate(frame, 'pickup', g, l_max)
    dropoffs, bad_dp, far_dp = _locate(frame, 'dropoff', g, l_max)

    bad = np.isnan(times) | bad_pk | bad_dp
    far = ~bad & (far_pk | far_dp)
    by_node = 'pickup_node' in frame.columns or 'dropoff_node' in frame.columns
    same = ~bad & ~far & (pickups == dropoffs)
    keep = ~bad & ~far & ~same

    errors = [
        f"{source}:{i + 2}: malformed timestamp or location"
        for i in np.flatnonzero(bad)[:MAX_REPORTED_ERRORS]
    ]
    dropped = {}
    if bad.any():
        dropped[DROP_PARSE] = int(bad.sum())
    if far.any():
        dropped[DROP_UNKNOWN_NODE if by_node else DROP_OUTSIDE] = int(far.sum())
    if same.any():
        dropped[DROP_SAME_VERTEX] = int(same.sum())

    store = TripStore(times=times[keep], pickups=pickups[keep], dropoffs=dropoffs[keep], dropped=dropped, errors=errors)
    if dropped:
        summary = ', '.join(f"{reason}={count}" for reason, count in sorted(dropped.items()))
        logger.warning(f"{source}: kept {len(store)} trip(s), dropped {store.total_dropped} ({summary})")
    else:
        logger.info(f"{source}: loaded {len(store)} trip(s)")
    return store


def build_demand_profile(
    history: TripStore,
    n_vertices: int,
    bucket_length: float = 600.0,
    lookahead: float = 600.0,
    horizon: float = 600.0,
    before: Optional[float] = None,
    days: Optional[int] = None
) -> DemandProfile:
    """Average pickups and dropoffs per bucket over the prior days of each day type.

    Prior days run up to the day containing `before` (exclusive); `days` limits how many.
    Days without trips still count towards the mean.
    """
    profile = DemandProfile.empty(n_vertices, bucket_length, lookahead, horizon)

    if before is not None:
        history = history.before(np.floor(before / SECONDS_PER_DAY) * SECONDS_PER_DAY)
    if len(history) == 0:
        logger.warning("Empty trip history, predicting zero demand everywhere")
        return profile

    first_day = day_index(history.times[0])
    last_day = day_index(history.times[-1]) if before is None else day_index(before) - 1
    if days is not None:
        first_day = max(first_day, last_day - days + 1)
        history = history.window(first_day * SECONDS_PER_DAY, np.inf)

    covered = np.arange(first_day, last_day + 1)
    kinds = np.where((covered + 3) % 7 >= 5, DayType.WEEKEND, DayType.WEEKDAY)
    day_counts = np.bincount(kinds, minlength=len(DayType)).astype(float)

    trip_days = np.floor(history.times / SECONDS_PER_DAY).astype(np.int64)
    trip_kinds = np.where((trip_days + 3) % 7 >= 5, DayType.WEEKEND, DayType.WEEKDAY)
    buckets = ((history.times % SECONDS_PER_DAY) // bucket_length).astype(np.int64)

    pickups = np.zeros_like(profile.pickups)
    dropoffs = np.zeros_like(profile.dropoffs)
    np.add.at(pickups, (trip_kinds, buckets, history.pickups), 1.0)
    np.add.at(dropoffs, (trip_kinds, buckets, history.dropoffs), 1.0)

    pooled_pk = pickups.sum(axis=0) / max(1.0, day_counts.sum())
    pooled_dp = dropoffs.sum(axis=0) / max(1.0, day_counts.sum())
    for kind in DayType:
        if day_counts[kind] > 0:
            profile.pickups[kind] = pickups[kind] / day_counts[kind]
            profile.dropoffs[kind] = dropoffs[kind] / day_counts[kind]
        else:
            logger.warning(f"No {kind.name.lower()} days in history, using the pooled mean for that day type")
            profile.pickups[kind] = pooled_pk
            profile.dropoffs[kind] = pooled_dp

    profile.history_days = int(len(covered))
    logger.info(
        f"Built demand profile from {len(history)} trip(s) over {len(covered)} day(s) "
        f"({int(day_counts[DayType.WEEKDAY])} weekday, {int(day_counts[DayType.WEEKEND])} weekend)"
    )
    return profile


def predict_point_demand(
    history: TripStore,
    v: int,
    t: float,
    bucket_length: float = 600.0,
    n_vertices: Optional[int] = None
) -> Tuple[float, float]:
    """Predicted (pickups, dropoffs) at v for the window [t, t + bucket_length)."""
    if len(history) == 0:
        logger.warning("Empty trip history, predicting zero demand")
        return 0.0, 0.0
    if n_vertices is None:
        n_vertices = int(max(history.pickups.max(), history.dropoffs.max(), v)) + 1
    profile = build_demand_profile(history, n_vertices, bucket_length=bucket_length, before=t)
    pickups, dropoffs = profile.expected(t, t + bucket_length)
    return float(pickups[v]), float(dropoffs[v])


def gap_vector(profile: DemandProfile, t: float) -> np.ndarray:
    return profile.gaps(t)


def pickup_dropoff_gap(profile: DemandProfile, v: int, t: float) -> float:
    return float(profile.gaps(t)[v])


def region_gap(p: Partition, profile: DemandProfile, idle_count_per_subarea: Sequence[float], t: float,
               gaps: Optional[np.ndarray] = None) -> np.ndarray:
    """Predicted net pickups minus supply per subarea; positive means vehicles are needed."""
    if gaps is None:
        gaps = profile.gaps(t)
    idle = np.asarray(idle_count_per_subarea, dtype=float)
    if idle.shape != (p.k,):
        raise ValueError(f"Expected {p.k} idle counts, got shape {idle.shape}")
    demand = np.bincount(p.assignment, weights=gaps, minlength=p.k)
    return demand - idle
