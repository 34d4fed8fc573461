"""
Dispatching Modules
Demand prediction, center search, baselines, matching and the simulator
"""

from .demand import ingest_trips, build_demand_profile, predict_point_demand, pickup_dropoff_gap, region_gap
from .relocation import objective, assign_subareas, update_centers, search_centers, multi_restart_search, brute_force_centers
from .baselines import fda_ved_partition, pic_partition, similarity_graph
from .matching import max_bipartite_matching, build_request_vehicle_graph, build_relocation_graph
from .event_log import EventLog, read_events
from .metrics import compute_metrics, audit
from .simulator import DispatchSimulator

__all__ = [
    'ingest_trips',
    'build_demand_profile',
    'predict_point_demand',
    'pickup_dropoff_gap',
    'region_gap',
    'objective',
    'assign_subareas',
    'update_centers',
    'search_centers',
    'multi_restart_search',
    'brute_force_centers',
    'fda_ved_partition',
    'pic_partition',
    'similarity_graph',
    'max_bipartite_matching',
    'build_request_vehicle_graph',
    'build_relocation_graph',
    'EventLog',
    'read_events',
    'compute_metrics',
    'audit',
    'DispatchSimulator'
]
