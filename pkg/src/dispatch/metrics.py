"""
Simulation Metrics
Serving ratio and distance metrics recomputed from an event log, plus log audits
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from src.models.events import EventKind, EventRecord
from src.models.metrics import HourlyRatio, MetricsReport

logger = logging.getLogger('dispatch_sim')

SECONDS_PER_HOUR = 3600.0
TIME_EPSILON = 1e-6


def _start_record(records: List[EventRecord]) -> Optional[EventRecord]:
    for r in records:
        if r.kind == EventKind.START:
            return r
    return None


def compute_metrics(log: Iterable[EventRecord], n_vehicles: Optional[int] = None) -> MetricsReport:
    records = list(log)
    start = _start_record(records)
    if n_vehicles is None:
        n_vehicles = int(start.get('n_vehicles', 0)) if start else 0
    origin = float(start.get('start', start.time)) if start else 0.0

    request_time: Dict[int, float] = {}
    served_at: Dict[int, float] = {}
    expired = 0
    vkm = 0.0
    tkm = 0.0
    for r in records:
        if r.kind == EventKind.REQUEST:
            request_time[int(r.get('request'))] = r.time
        elif r.kind == EventKind.PICKUP:
            served_at[int(r.get('request'))] = r.time
        elif r.kind == EventKind.EXPIRE:
            expired += 1
        if r.kind == EventKind.DROPOFF:
            tkm += r.km
        if r.kind.drives:
            vkm += r.km

    n_requests = len(request_time)
    n_served = len(served_at)
    report = MetricsReport(
        n_vehicles=n_vehicles,
        n_requests=n_requests,
        n_served=n_served,
        n_expired=expired,
        vkm=vkm,
        tkm=tkm
    )
    if start is not None:
        report.method = str(start.get('method', ''))
        report.activation = str(start.get('activation', ''))
        report.seed = start.get('seed')

    if n_requests == 0:
        report.served_ratio = 1.0
        report.no_demand = True
    else:
        report.served_ratio = n_served / n_requests
    report.rho = vkm / tkm if tkm > 0 else None
    report.kappa = tkm / n_vehicles if n_vehicles > 0 else 0.0
    if served_at:
        waits = [served_at[i] - request_time[i] for i in served_at if i in request_time]
        report.tau = float(np.mean(waits)) if waits else None

    hours: Dict[int, HourlyRatio] = {}
    for request, t in request_time.items():
        h = int(np.floor((t - origin) / SECONDS_PER_HOUR))
        bucket = hours.setdefault(h, HourlyRatio(hour_start=origin + h * SECONDS_PER_HOUR))
        bucket.requests += 1
        if request in served_at:
            bucket.served += 1
    report.hourly = [hours[h] for h in sorted(hours)]
    return report


@dataclass
class AuditReport:
    requests: int = 0
    served: int = 0
    expired: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            'ok': self.ok,
            'requests': self.requests,
            'served': self.served,
            'expired': self.expired,
            'violations': list(self.violations)
        }


def audit(log: Iterable[EventRecord], max_wait: Optional[float] = None,
          relocation_horizon: Optional[float] = None) -> AuditReport:
    """Check the served-trip window, conservation, relocation feasibility and vehicle usage."""
    records = list(log)
    start = _start_record(records)
    if max_wait is None and start is not None:
        max_wait = start.get('max_wait')
    if relocation_horizon is None and start is not None:
        relocation_horizon = start.get('relocation_horizon')

    report = AuditReport()
    request_time: Dict[int, float] = {}
    outcome: Dict[int, str] = {}
    relocating_since: Dict[int, float] = {}
    carrying: Dict[int, int] = {}

    def flag(message: str):
        if len(report.violations) < 100:
            report.violations.append(message)

    for r in records:
        if r.km < 0:
            flag(f"t={r.time}: negative distance {r.km} on {r.kind.value}")

        if r.kind == EventKind.REQUEST:
            request_time[int(r.get('request'))] = r.time
        elif r.kind == EventKind.ASSIGN:
            vehicle = int(r.get('vehicle'))
            if vehicle in carrying:
                flag(f"t={r.time}: vehicle {vehicle} assigned while carrying request {carrying[vehicle]}")
            relocating_since.pop(vehicle, None)
        elif r.kind == EventKind.PICKUP:
            request = int(r.get('request'))
            vehicle = int(r.get('vehicle'))
            carrying[vehicle] = request
            if request in outcome:
                flag(f"request {request} resolved twice")
            outcome[request] = 'served'
            t_p = request_time.get(request)
            if t_p is None:
                flag(f"request {request} picked up without a request record")
            elif not (t_p - TIME_EPSILON <= r.time <= t_p + (max_wait or np.inf) + TIME_EPSILON):
                flag(f"request {request} picked up at {r.time}, outside [{t_p}, {t_p + (max_wait or 0)}]")
        elif r.kind == EventKind.DROPOFF:
            carrying.pop(int(r.get('vehicle')), None)
        elif r.kind == EventKind.EXPIRE:
            request = int(r.get('request'))
            if request in outcome:
                flag(f"request {request} resolved twice")
            outcome[request] = 'expired'
        elif r.kind == EventKind.RELOCATE:
            relocating_since[int(r.get('vehicle'))] = r.time
        elif r.kind == EventKind.ARRIVE:
            vehicle = int(r.get('vehicle'))
            issued = relocating_since.pop(vehicle, None)
            if issued is not None and relocation_horizon is not None and r.time - issued > relocation_horizon + TIME_EPSILON:
                flag(f"vehicle {vehicle} reached its center {r.time - issued:.1f}s after the order (limit {relocation_horizon}s)")
        elif r.kind == EventKind.DIVERT:
            relocating_since.pop(int(r.get('vehicle')), None)

    report.requests = len(request_time)
    report.served = sum(1 for o in outcome.values() if o == 'served')
    report.expired = sum(1 for o in outcome.values() if o == 'expired')
    unresolved = sorted(set(request_time) - set(outcome))
    if unresolved:
        flag(f"{len(unresolved)} request(s) neither served nor expired, first {unresolved[:5]}")
    if report.served + report.expired != report.requests:
        flag(f"conservation broken: {report.served} served + {report.expired} expired != {report.requests} requests")
    if carrying:
        flag(f"{len(carrying)} passenger leg(s) never completed")

    if not report.ok:
        logger.warning(f"Event log audit found {len(report.violations)} problem(s)")
    return report
