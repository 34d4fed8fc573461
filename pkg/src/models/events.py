"""
Event Models
Records written to the simulation event log
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict


class EventKind(Enum):
    START = "start"
    REQUEST = "request"
    ASSIGN = "assign"
    PICKUP = "pickup"
    DROPOFF = "dropoff"
    EXPIRE = "expire"
    RELOCATE = "relocate"
    ARRIVE = "arrive"
    DIVERT = "divert"
    PARTITION = "partition"
    END = "end"

    @property
    def drives(self) -> bool:
        """Kinds whose km field is distance driven by a vehicle."""
        return self in (EventKind.PICKUP, EventKind.DROPOFF, EventKind.ARRIVE, EventKind.DIVERT)


@dataclass
class EventRecord:
    time: float
    kind: EventKind
    km: float = 0.0
    data: Dict[str, Any] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def to_dict(self) -> dict:
        return {'time': self.time, 'kind': self.kind.value, 'km': self.km, **self.data}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))

    @classmethod
    def from_dict(cls, data: dict) -> 'EventRecord':
        payload = dict(data)
        return cls(
            time=float(payload.pop('time')),
            kind=EventKind(payload.pop('kind')),
            km=float(payload.pop('km', 0.0)),
            data=payload
        )
