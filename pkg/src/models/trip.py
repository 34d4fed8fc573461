"""
Trip Models
Trip requests, their realized service records and the sorted trip store
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional

import numpy as np


class TripStatus(Enum):
    SERVED = "served"
    EXPIRED = "expired"


@dataclass(frozen=True)
class TripRequest:
    id: int
    request_time: float
    pickup: int
    dropoff: int

    def deadline(self, max_wait: float) -> float:
        return self.request_time + max_wait

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'request_time': self.request_time,
            'pickup': self.pickup,
            'dropoff': self.dropoff
        }


@dataclass
class TripOutcome:
    request_id: int
    request_time: float
    pickup: int
    dropoff: int
    status: TripStatus = TripStatus.EXPIRED
    pickup_time: Optional[float] = None
    vehicle_id: Optional[int] = None
    pickup_deadhead_km: float = 0.0
    trip_km: float = 0.0

    @property
    def served(self) -> bool:
        return self.status == TripStatus.SERVED

    @property
    def wait(self) -> Optional[float]:
        if self.pickup_time is None:
            return None
        return self.pickup_time - self.request_time

    def to_dict(self) -> dict:
        return {
            'request_id': self.request_id,
            'request_time': self.request_time,
            'pickup': self.pickup,
            'dropoff': self.dropoff,
            'status': self.status.value,
            'pickup_time': self.pickup_time,
            'vehicle_id': self.vehicle_id,
            'pickup_deadhead_km': self.pickup_deadhead_km,
            'trip_km': self.trip_km
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TripOutcome':
        outcome = cls(
            request_id=int(data['request_id']),
            request_time=float(data['request_time']),
            pickup=int(data['pickup']),
            dropoff=int(data['dropoff'])
        )
        if data.get('status'):
            outcome.status = TripStatus(data['status'])
        for key in ['pickup_time', 'vehicle_id', 'pickup_deadhead_km', 'trip_km']:
            if data.get(key) is not None:
                setattr(outcome, key, data[key])
        return outcome


@dataclass
class TripStore:
    """Trips sorted by (time, pickup, dropoff); request ids are positions in that order."""

    times: np.ndarray
    pickups: np.ndarray
    dropoffs: np.ndarray
    dropped: Dict[str, int] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        pickups = np.asarray(self.pickups, dtype=np.int64)
        dropoffs = np.asarray(self.dropoffs, dtype=np.int64)
        order = np.lexsort((dropoffs, pickups, times))
        self.times = times[order]
        self.pickups = pickups[order]
        self.dropoffs = dropoffs[order]

    @classmethod
    def empty(cls) -> 'TripStore':
        return cls(times=np.zeros(0), pickups=np.zeros(0, dtype=np.int64), dropoffs=np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(len(self.times))

    def __iter__(self) -> Iterator[TripRequest]:
        for i in range(len(self)):
            yield self.request(i)

    def request(self, index: int) -> TripRequest:
        return TripRequest(
            id=int(index),
            request_time=float(self.times[index]),
            pickup=int(self.pickups[index]),
            dropoff=int(self.dropoffs[index])
        )

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def window(self, t0: float, t1: float) -> 'TripStore':
        lo, hi = np.searchsorted(self.times, [t0, t1], side='left')
        return TripStore(times=self.times[lo:hi], pickups=self.pickups[lo:hi], dropoffs=self.dropoffs[lo:hi])

    def before(self, t: float) -> 'TripStore':
        return self.window(-np.inf, t)

    def equals(self, other: 'TripStore') -> bool:
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.pickups, other.pickups)
            and np.array_equal(self.dropoffs, other.dropoffs)
        )
