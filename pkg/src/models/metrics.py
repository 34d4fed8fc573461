"""
Metrics Models
Serving-ratio and distance metrics of a simulation run plus operation timings
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class HourlyRatio:
    hour_start: float
    requests: int = 0
    served: int = 0

    @property
    def ratio(self) -> float:
        if self.requests == 0:
            return 1.0
        return self.served / self.requests

    def to_dict(self) -> dict:
        return {
            'hour_start': self.hour_start,
            'requests': self.requests,
            'served': self.served,
            'ratio': self.ratio
        }


@dataclass
class MetricsReport:
    n_vehicles: int
    n_requests: int = 0
    n_served: int = 0
    n_expired: int = 0
    served_ratio: float = 1.0
    vkm: float = 0.0
    tkm: float = 0.0
    rho: Optional[float] = None
    kappa: float = 0.0
    tau: Optional[float] = None
    no_demand: bool = False
    method: str = ""
    activation: str = ""
    seed: Optional[int] = None
    hourly: List[HourlyRatio] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        """Flat row for the metrics CSV; undefined values stay empty."""
        return {
            'method': self.method,
            'n_vehicles': self.n_vehicles,
            'activation': self.activation,
            'seed': self.seed,
            'requests': self.n_requests,
            'served': self.n_served,
            'expired': self.n_expired,
            'R': self.served_ratio,
            'rho': self.rho,
            'kappa': self.kappa,
            'tau': self.tau,
            'VKM': self.vkm,
            'TKM': self.tkm,
            'no_demand': self.no_demand
        }

    def hourly_rows(self) -> List[Dict[str, Any]]:
        return [
            {'method': self.method, 'n_vehicles': self.n_vehicles, 'activation': self.activation, **h.to_dict()}
            for h in self.hourly
        ]


@dataclass
class OperationTimings:
    name: str
    budget_seconds: Optional[float] = None
    samples: List[float] = field(default_factory=list)
    over_budget: int = 0

    def record(self, seconds: float) -> bool:
        """Store one sample; returns True when it exceeded the soft budget."""
        self.samples.append(seconds)
        exceeded = self.budget_seconds is not None and seconds > self.budget_seconds
        if exceeded:
            self.over_budget += 1
        return exceeded

    def timer(self) -> 'Stopwatch':
        return Stopwatch(self)

    @property
    def count(self) -> int:
        return len(self.samples)

    def to_dict(self) -> dict:
        if not self.samples:
            return {'name': self.name, 'count': 0, 'budget_seconds': self.budget_seconds}
        return {
            'name': self.name,
            'count': self.count,
            'mean': sum(self.samples) / self.count,
            'min': min(self.samples),
            'max': max(self.samples),
            'total': sum(self.samples),
            'budget_seconds': self.budget_seconds,
            'over_budget': self.over_budget
        }


class Stopwatch:
    def __init__(self, timings: OperationTimings):
        self.timings = timings
        self.elapsed = 0.0
        self.exceeded = False
        self._start = 0.0

    def __enter__(self) -> 'Stopwatch':
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._start
        self.exceeded = self.timings.record(self.elapsed)
        return False
