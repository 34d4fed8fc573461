"""
Vehicle Models
Fleet members and their dispatch states
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class VehicleState(Enum):
    FREE = "free"
    TO_PICKUP = "to_pickup"
    WITH_PASSENGER = "with_passenger"
    RELOCATING = "relocating"


@dataclass
class Vehicle:
    id: int
    location: int
    state: VehicleState = VehicleState.FREE
    busy_until: float = 0.0
    odometer_km: float = 0.0

    # current leg; location holds the leg origin while moving
    destination: Optional[int] = None
    leg_start: float = 0.0
    leg_km: float = 0.0
    request_id: Optional[int] = None
    target_subarea: Optional[int] = None

    @property
    def is_free(self) -> bool:
        return self.state == VehicleState.FREE

    def start_leg(self, state: VehicleState, destination: int, now: float, duration: float, km: float,
                  request_id: Optional[int] = None, target_subarea: Optional[int] = None):
        self.state = state
        self.destination = destination
        self.leg_start = now
        self.busy_until = now + duration
        self.leg_km = km
        self.request_id = request_id
        self.target_subarea = target_subarea

    def finish_leg(self) -> float:
        """Park at the leg destination and return the kilometres driven."""
        km = self.leg_km
        self.odometer_km += km
        if self.destination is not None:
            self.location = self.destination
        self.state = VehicleState.FREE
        self.destination = None
        self.leg_km = 0.0
        self.request_id = None
        self.target_subarea = None
        return km

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'location': self.location,
            'state': self.state.value,
            'busy_until': self.busy_until,
            'odometer_km': self.odometer_km,
            'destination': self.destination,
            'request_id': self.request_id
        }
