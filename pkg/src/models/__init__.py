"""
Data Models for the Dispatching Engine
Defines the data structures used throughout the engine
"""

from .graph import RoadGraph, DistanceMatrix
from .trip import TripRequest, TripOutcome, TripStatus, TripStore
from .demand import DemandProfile, DayType
from .partition import Partition, ActivationKind, activation
from .vehicle import Vehicle, VehicleState
from .config import SimConfig, FdaVedConfig, PathsConfig, SweepConfig, ExperimentConfig, DispatchMethod
from .metrics import MetricsReport, HourlyRatio, OperationTimings
from .events import EventKind, EventRecord

__all__ = [
    'RoadGraph',
    'DistanceMatrix',
    'TripRequest',
    'TripOutcome',
    'TripStatus',
    'TripStore',
    'DemandProfile',
    'DayType',
    'Partition',
    'ActivationKind',
    'activation',
    'Vehicle',
    'VehicleState',
    'SimConfig',
    'FdaVedConfig',
    'PathsConfig',
    'SweepConfig',
    'ExperimentConfig',
    'DispatchMethod',
    'MetricsReport',
    'HourlyRatio',
    'OperationTimings',
    'EventKind',
    'EventRecord'
]
