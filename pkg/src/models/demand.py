"""
Demand Models
Historical-average pickup and dropoff predictions per vertex and time-of-day bucket
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

SECONDS_PER_DAY = 86400.0
# 1970-01-01 was a Thursday
EPOCH_WEEKDAY = 3


class DayType(IntEnum):
    WEEKDAY = 0
    WEEKEND = 1


def day_index(t: float) -> int:
    return int(np.floor(float(t) / SECONDS_PER_DAY))


def day_type(t: float) -> DayType:
    weekday = (day_index(t) + EPOCH_WEEKDAY) % 7
    return DayType.WEEKEND if weekday >= 5 else DayType.WEEKDAY


@dataclass
class DemandProfile:
    """Mean pickups/dropoffs per window of `bucket_length` seconds.

    Arrays are indexed (day type, bucket, vertex).
    """

    pickups: np.ndarray
    dropoffs: np.ndarray
    bucket_length: float = 600.0
    lookahead: float = 600.0
    horizon: float = 600.0
    history_days: int = 0

    def __post_init__(self):
        self.pickups = np.asarray(self.pickups, dtype=float)
        self.dropoffs = np.asarray(self.dropoffs, dtype=float)
        if self.pickups.shape != self.dropoffs.shape or self.pickups.ndim != 3:
            raise ValueError("pickups and dropoffs must share shape (day_types, buckets, vertices)")
        if SECONDS_PER_DAY % self.bucket_length != 0:
            raise ValueError(f"bucket length {self.bucket_length}s does not divide 24 h")
        if np.any(self.pickups < 0) or np.any(self.dropoffs < 0):
            raise ValueError("predicted counts must be non-negative")

    @classmethod
    def empty(cls, n_vertices: int, bucket_length: float = 600.0, lookahead: float = 600.0, horizon: float = 600.0) -> 'DemandProfile':
        n_buckets = int(SECONDS_PER_DAY // bucket_length)
        zeros = np.zeros((len(DayType), n_buckets, n_vertices))
        return cls(pickups=zeros, dropoffs=zeros.copy(), bucket_length=bucket_length, lookahead=lookahead, horizon=horizon)

    @property
    def n_buckets(self) -> int:
        return int(self.pickups.shape[1])

    @property
    def n_vertices(self) -> int:
        return int(self.pickups.shape[2])

    def bucket_of(self, t: float) -> int:
        return int((float(t) % SECONDS_PER_DAY) // self.bucket_length)

    def expected(self, t0: float, t1: float) -> Tuple[np.ndarray, np.ndarray]:
        """Expected pickups and dropoffs per vertex over [t0, t1)."""
        pk = np.zeros(self.n_vertices)
        dp = np.zeros(self.n_vertices)
        cursor = float(t0)
        while cursor < t1:
            bucket_start = np.floor(cursor / self.bucket_length) * self.bucket_length
            segment_end = min(bucket_start + self.bucket_length, float(t1))
            share = (segment_end - cursor) / self.bucket_length
            kind = day_type(cursor)
            bucket = self.bucket_of(cursor)
            pk += share * self.pickups[kind, bucket]
            dp += share * self.dropoffs[kind, bucket]
            cursor = segment_end
        return pk, dp

    def gaps(self, t: float) -> np.ndarray:
        pk, dp = self.expected(t, t + self.horizon)
        return pk - dp
