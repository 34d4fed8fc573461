"""
Experiment Modules
Config loading, sweeps, comparisons, replays and synthetic scenarios
"""

from .config_loader import load_config, cli_overrides, workers_from_env
from .runner import run_experiment, run_cell, load_inputs, ExperimentResult
from .compare import compare_methods, Comparison
from .replay import replay
from .scenario import grid_graph, imbalanced_trips, build_scenario, write_scenario, random_instance, Scenario

__all__ = [
    'load_config',
    'cli_overrides',
    'workers_from_env',
    'run_experiment',
    'run_cell',
    'load_inputs',
    'ExperimentResult',
    'compare_methods',
    'Comparison',
    'replay',
    'grid_graph',
    'imbalanced_trips',
    'build_scenario',
    'write_scenario',
    'random_instance',
    'Scenario'
]
