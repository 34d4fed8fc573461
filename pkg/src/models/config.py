"""
Experiment Configuration Models
Simulation, baseline and sweep settings loaded from the YAML config file
"""

from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

from src.errors import ConfigError
from src.models.partition import ActivationKind
from src.utils.helpers import parse_duration, parse_timestamp

SCHEMA_VERSION = 1


class DispatchMethod(Enum):
    DFDA = "dfda"
    FDA = "fda"
    PIC = "pic"
    NONE = "none"

    @classmethod
    def parse(cls, value: Union[str, 'DispatchMethod']) -> 'DispatchMethod':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            options = ', '.join(m.value for m in cls)
            raise ConfigError(f"Unknown method {value!r}; expected one of {options}") from None


def _check_keys(cls, data: Dict[str, Any], section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{section}' must be a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown key(s) in '{section}': {', '.join(unknown)}")


def _duration(value: Any, key: str) -> float:
    seconds = parse_duration(value)
    if seconds is None:
        raise ConfigError(f"'{key}' is not a duration: {value!r}")
    return seconds


DURATION_KEYS = (
    'max_wait', 'relocation_horizon', 'forecast_window', 'lookahead',
    'batch_interval', 'relocation_interval', 'slot_length', 'duration'
)


@dataclass
class SimConfig:
    n_vehicles: int = 30
    max_wait: float = 300.0
    relocation_horizon: float = 600.0
    forecast_window: float = 600.0
    lookahead: float = 600.0
    l_max: float = 200.0
    batch_interval: float = 60.0
    relocation_interval: float = 600.0
    k: int = 4
    activation: ActivationKind = ActivationKind.RELU
    method: DispatchMethod = DispatchMethod.DFDA
    restarts: int = 8
    restart_workers: int = 1
    seed: int = 0
    divertible: bool = True
    weighted_update: bool = True
    partition_once: bool = False
    max_iterations: int = 1000
    slot_length: float = 3600.0
    reference_speed_mps: float = 8.33
    start: Optional[float] = None
    duration: float = 7200.0
    initial_positions: Optional[List[str]] = None

    def validate(self):
        for key in DURATION_KEYS:
            if getattr(self, key) <= 0:
                raise ConfigError(f"sim.{key} must be positive, got {getattr(self, key)}")
        if self.l_max <= 0:
            raise ConfigError(f"sim.l_max must be positive, got {self.l_max}")
        if self.relocation_interval % self.batch_interval != 0:
            raise ConfigError(
                f"sim.batch_interval ({self.batch_interval}s) must divide "
                f"sim.relocation_interval ({self.relocation_interval}s)"
            )
        if self.n_vehicles < 0:
            raise ConfigError(f"sim.n_vehicles must be >= 0, got {self.n_vehicles}")
        if self.k < 1:
            raise ConfigError(f"sim.k must be >= 1, got {self.k}")
        if self.restarts < 1:
            raise ConfigError(f"sim.restarts must be >= 1, got {self.restarts}")
        if self.restart_workers < 1:
            raise ConfigError(f"sim.restart_workers must be >= 1, got {self.restart_workers}")
        if self.max_iterations < 1:
            raise ConfigError(f"sim.max_iterations must be >= 1, got {self.max_iterations}")
        if self.reference_speed_mps <= 0:
            raise ConfigError(f"sim.reference_speed_mps must be positive, got {self.reference_speed_mps}")

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['activation'] = self.activation.value
        data['method'] = self.method.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SimConfig':
        _check_keys(cls, data, 'sim')
        values = dict(data)
        for key in DURATION_KEYS:
            if key in values:
                values[key] = _duration(values[key], f"sim.{key}")
        if values.get('start') is not None:
            try:
                values['start'] = parse_timestamp(values['start'])
            except ValueError as e:
                raise ConfigError(f"sim.start: {e}") from None
        if 'activation' in values:
            try:
                values['activation'] = ActivationKind.parse(values['activation'])
            except ValueError as e:
                raise ConfigError(str(e)) from None
        if 'method' in values:
            values['method'] = DispatchMethod.parse(values['method'])
        if values.get('initial_positions') is not None:
            values['initial_positions'] = [str(v) for v in values['initial_positions']]
        return cls(**values)


@dataclass
class FdaVedConfig:
    n_max: Optional[int] = None
    reach_seconds: Optional[float] = None

    def resolve(self, n_vertices: int, k: int, max_wait: float) -> 'FdaVedConfig':
        """Concrete settings for a graph: n_max defaults to ceil(n / k), reach to the wait limit."""
        n_max = self.n_max if self.n_max is not None else max(1, -(-n_vertices // max(1, k)))
        reach = self.reach_seconds if self.reach_seconds is not None else max_wait
        return FdaVedConfig(n_max=n_max, reach_seconds=reach)

    def n_sub(self, n_points: int) -> int:
        if not self.n_max:
            return 0
        return n_points // self.n_max

    def validate(self):
        if self.n_max is not None and self.n_max < 1:
            raise ConfigError(f"fda.n_max must be >= 1, got {self.n_max}")
        if self.reach_seconds is not None and self.reach_seconds < 0:
            raise ConfigError(f"fda.reach_seconds must be >= 0, got {self.reach_seconds}")

    def to_dict(self) -> dict:
        return {'n_max': self.n_max, 'reach_seconds': self.reach_seconds}

    @classmethod
    def from_dict(cls, data: dict) -> 'FdaVedConfig':
        _check_keys(cls, data, 'fda')
        values = dict(data)
        if values.get('reach_seconds') is not None:
            values['reach_seconds'] = _duration(values['reach_seconds'], 'fda.reach_seconds')
        return cls(**values)


@dataclass
class PathsConfig:
    nodes: str = "data/toy/nodes.csv"
    edges: str = "data/toy/edges.csv"
    trips: Optional[str] = None
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return {'nodes': self.nodes, 'edges': self.edges, 'trips': self.trips, 'out_dir': self.out_dir}

    @classmethod
    def from_dict(cls, data: dict) -> 'PathsConfig':
        _check_keys(cls, data, 'paths')
        return cls(**{k: (str(v) if v is not None else None) for k, v in data.items()})


@dataclass
class SweepConfig:
    methods: List[str] = field(default_factory=list)
    vehicles: List[int] = field(default_factory=list)
    activations: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {'methods': list(self.methods), 'vehicles': list(self.vehicles), 'activations': list(self.activations)}

    @classmethod
    def from_dict(cls, data: dict) -> 'SweepConfig':
        _check_keys(cls, data, 'sweep')
        sweep = cls()
        for key in ('methods', 'vehicles', 'activations'):
            value = data.get(key)
            if value is None:
                continue
            if not isinstance(value, list):
                value = [value]
            setattr(sweep, key, value)
        sweep.methods = [DispatchMethod.parse(m).value for m in sweep.methods]
        try:
            sweep.activations = [ActivationKind.parse(a).value for a in sweep.activations]
            sweep.vehicles = [int(v) for v in sweep.vehicles]
        except ValueError as e:
            raise ConfigError(f"sweep: {e}") from None
        return sweep


@dataclass
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    name: str = "experiment"
    history_days: int = 7
    paths: PathsConfig = field(default_factory=PathsConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    fda: FdaVedConfig = field(default_factory=FdaVedConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def cells(self) -> List[Tuple[DispatchMethod, int, ActivationKind]]:
        """Sweep cells in a fixed order: method, then fleet size, then activation."""
        methods = self.sweep.methods or [self.sim.method.value]
        vehicles = self.sweep.vehicles or [self.sim.n_vehicles]
        activations = self.sweep.activations or [self.sim.activation.value]
        return [
            (DispatchMethod.parse(m), int(n), ActivationKind.parse(a))
            for m in methods
            for n in vehicles
            for a in activations
        ]

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"Unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.history_days < 0:
            raise ConfigError(f"history_days must be >= 0, got {self.history_days}")
        self.sim.validate()
        self.fda.validate()
        if any(n < 0 for n in self.sweep.vehicles):
            raise ConfigError(f"sweep.vehicles must be >= 0, got {self.sweep.vehicles}")

    def to_dict(self) -> dict:
        return {
            'schema_version': self.schema_version,
            'name': self.name,
            'history_days': self.history_days,
            'paths': self.paths.to_dict(),
            'sim': self.sim.to_dict(),
            'fda': self.fda.to_dict(),
            'sweep': self.sweep.to_dict()
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        _check_keys(cls, data, 'config')
        if 'schema_version' not in data:
            raise ConfigError("Config is missing 'schema_version'")
        config = cls(
            schema_version=int(data['schema_version']),
            name=str(data.get('name', 'experiment')),
            history_days=int(data.get('history_days', 7)),
            paths=PathsConfig.from_dict(data.get('paths') or {}),
            sim=SimConfig.from_dict(data.get('sim') or {}),
            fda=FdaVedConfig.from_dict(data.get('fda') or {}),
            sweep=SweepConfig.from_dict(data.get('sweep') or {})
        )
        return config
