"""
Simulation Event Log
Append-only newline-delimited JSON log of everything the simulator does
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import IO, Iterator, List, Optional, Union

from src.models.events import EventKind, EventRecord

logger = logging.getLogger('dispatch_sim')

KM_DECIMALS = 6


class EventLog:
    """Keeps records in memory and mirrors them to a JSONL file when a path is given."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self.records: List[EventRecord] = []
        self._digest = hashlib.sha256()
        self._handle: Optional[IO[str]] = None
        if self.path is not None:
            os.makedirs(self.path.parent, exist_ok=True)
            self._handle = open(self.path, 'w', encoding='utf-8', newline='\n')

    def append(self, time: float, kind: EventKind, km: float = 0.0, **data) -> EventRecord:
        record = EventRecord(time=float(time), kind=kind, km=round(float(km), KM_DECIMALS), data=data)
        line = record.to_json() + '\n'
        self.records.append(record)
        self._digest.update(line.encode('utf-8'))
        if self._handle is not None:
            self._handle.write(line)
        return record

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EventRecord]:
        return iter(self.records)

    def of_kind(self, kind: EventKind) -> List[EventRecord]:
        return [r for r in self.records if r.kind == kind]

    def digest(self) -> str:
        return self._digest.hexdigest()

    def close(self):
        if self._handle is not None:
            self._handle.flush()
            os.fsync(self._handle.fileno())
            self._handle.close()
            self._handle = None

    def __enter__(self) -> 'EventLog':
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


def read_events(path: Union[str, Path]) -> List[EventRecord]:
    """Load a log written by EventLog; stops at the first unreadable line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"event log not found: {path}")

    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(EventRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                logger.warning(f"{path}:{number}: unreadable event record, stopping replay here ({e})")
                break
    return records
