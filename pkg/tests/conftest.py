"""
Shared fixtures: the four-vertex toy graph, line graphs and hand-built demand profiles
"""

from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd
import pytest

from src.models.config import SimConfig
from src.models.demand import DemandProfile
from src.models.trip import TripStore
from src.routing.road_graph import load_graph

ROOT = Path(__file__).resolve().parents[1]
TOY_DIR = ROOT / 'data' / 'toy'

# minutes; row = origin, column = destination, order A, B, C, D
TOY_MINUTES = np.array([
    [0, 5, 13, 8],
    [4, 0, 8, 3],
    [5, 6, 0, 9],
    [10, 11, 5, 0],
], dtype=float)
TOY_GAPS = np.array([1.0, -1.0, 0.0, 1.0])


@pytest.fixture
def toy_graph():
    return load_graph(TOY_DIR / 'nodes.csv', TOY_DIR / 'edges.csv')


@pytest.fixture
def toy_minutes():
    return TOY_MINUTES.copy()


@pytest.fixture
def toy_gaps():
    return TOY_GAPS.copy()


def make_line_graph(n: int, seconds: float = 120.0, length_m: float = 1000.0):
    """X0 - X1 - ... - X{n-1}, both directions."""
    labels = [f"X{i}" for i in range(n)]
    nodes = pd.DataFrame({'node_id': labels, 'x_m': np.arange(n) * length_m, 'y_m': np.zeros(n)})
    rows = []
    for i in range(n - 1):
        rows.append({'from': labels[i], 'to': labels[i + 1], 'slot_0': seconds, 'length_m': length_m})
        rows.append({'from': labels[i + 1], 'to': labels[i], 'slot_0': seconds, 'length_m': length_m})
    return load_graph(nodes, pd.DataFrame(rows))


def flat_profile(n: int, pickups: Optional[Dict[int, float]] = None, dropoffs: Optional[Dict[int, float]] = None,
                 bucket_length: float = 600.0, horizon: float = 600.0) -> DemandProfile:
    """Same counts per bucket at every time of day and day type."""
    profile = DemandProfile.empty(n, bucket_length=bucket_length, horizon=horizon)
    for v, count in (pickups or {}).items():
        profile.pickups[:, :, v] = count
    for v, count in (dropoffs or {}).items():
        profile.dropoffs[:, :, v] = count
    return profile


def make_trips(rows) -> TripStore:
    """rows: (time, pickup id, dropoff id)."""
    if not rows:
        return TripStore.empty()
    times, pickups, dropoffs = zip(*rows)
    return TripStore(times=np.array(times, dtype=float), pickups=np.array(pickups), dropoffs=np.array(dropoffs))


def make_config(**overrides) -> SimConfig:
    values = {'start': 0.0, 'duration': 600.0, 'restarts': 4}
    values.update(overrides)
    return SimConfig.from_dict(values)


@pytest.fixture
def line_graph():
    return make_line_graph(5)
