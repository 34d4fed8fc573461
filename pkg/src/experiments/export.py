"""
Report Writers
CSV and JSON artifacts of experiment runs
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.models.graph import RoadGraph
from src.models.metrics import MetricsReport
from src.models.partition import Partition
from src.models.trip import TripOutcome
from src.utils.helpers import canonical_json

logger = logging.getLogger('experiments')

PathLike = Union[str, Path]

METRIC_COLUMNS = [
    'method', 'n_vehicles', 'activation', 'seed', 'requests', 'served', 'expired',
    'R', 'rho', 'kappa', 'tau', 'VKM', 'TKM', 'no_demand'
]
HOURLY_COLUMNS = ['method', 'n_vehicles', 'activation', 'hour_start', 'requests', 'served', 'ratio']
SNAPSHOT_COLUMNS = [
    'cycle', 'time', 'method', 'vertex_id', 'subarea_index', 'center_id', 'is_center', 'gap'
]
OUTCOME_COLUMNS = [
    'request_id', 'request_time', 'pickup', 'dropoff', 'status', 'pickup_time', 'wait',
    'vehicle_id', 'pickup_deadhead_km', 'trip_km'
]


def _frame(rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=list(columns))


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.6f', lineterminator='\n')
    return path


def write_json(data: Any, path: PathLike) -> Path:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=str)
        f.write('\n')
    return path


def metrics_frame(rows: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    return _frame(rows, METRIC_COLUMNS)


def write_metrics(reports: Iterable[Union[MetricsReport, Dict[str, Any]]], path: PathLike) -> Path:
    rows = [r.to_row() if isinstance(r, MetricsReport) else r for r in reports]
    return write_csv(metrics_frame(rows), path)


def write_hourly(reports: Iterable[Union[MetricsReport, List[Dict[str, Any]]]], path: PathLike) -> Path:
    rows: List[Dict[str, Any]] = []
    for r in reports:
        rows.extend(r.hourly_rows() if isinstance(r, MetricsReport) else r)
    return write_csv(_frame(rows, HOURLY_COLUMNS), path)


class PartitionRecorder:
    """Collects one snapshot per relocation cycle, including every vertex's gap."""

    def __init__(self, g: RoadGraph):
        self.g = g
        self.rows: List[Dict[str, Any]] = []
        self.summaries: List[Dict[str, Any]] = []

    def __call__(self, cycle: int, t: float, partition: Partition, gaps: np.ndarray):
        is_center = np.zeros(partition.n_vertices, dtype=bool)
        is_center[partition.centers] = True
        for row, gap, center in zip(partition.to_rows(self.g.labels), gaps, is_center):
            self.rows.append({
                'cycle': cycle,
                'time': t,
                'method': partition.method,
                **row,
                'is_center': bool(center),
                'gap': float(gap)
            })
        self.summaries.append({'cycle': cycle, 'time': t, 'method': partition.method, **partition.summary()})

    def write(self, csv_path: PathLike, summary_path: Optional[PathLike] = None) -> Path:
        """Snapshot CSV, plus one JSON summary line per cycle when `summary_path` is given."""
        path = write_csv(_frame(self.rows, SNAPSHOT_COLUMNS), csv_path)
        if summary_path is not None:
            summary_path = Path(summary_path)
            os.makedirs(summary_path.parent, exist_ok=True)
            with open(summary_path, 'w', encoding='utf-8', newline='\n') as f:
                for line in self.summaries:
                    f.write(canonical_json(line) + '\n')
        return path


def write_outcomes(outcomes: Iterable[TripOutcome], path: PathLike, labels: Optional[Sequence[str]] = None) -> Path:
    rows = []
    for o in outcomes:
        row = o.to_dict()
        row['wait'] = o.wait
        if labels is not None:
            row['pickup'] = labels[o.pickup]
            row['dropoff'] = labels[o.dropoff]
        rows.append(row)
    return write_csv(_frame(rows, OUTCOME_COLUMNS), path)
