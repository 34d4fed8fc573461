"""
Experiment Runner
Runs every sweep cell of an experiment and writes the reports, timings and manifest
"""

import asyncio
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import psutil

from src.dispatch.demand import build_demand_profile, ingest_trips
from src.dispatch.event_log import EventLog
from src.dispatch.metrics import audit
from src.dispatch.simulator import DispatchSimulator
from src.experiments.export import PartitionRecorder, write_hourly, write_json, write_metrics, write_outcomes
from src.models.config import SCHEMA_VERSION, DispatchMethod, ExperimentConfig
from src.models.demand import SECONDS_PER_DAY, DemandProfile
from src.models.graph import RoadGraph
from src.models.partition import ActivationKind
from src.models.trip import TripStore
from src.routing.road_graph import load_graph
from src.utils.helpers import canonical_json, format_bytes, format_duration, format_timestamp, generate_hash, hash_file
from src.utils.validators import check_file

logger = logging.getLogger('experiments')

CODE_VERSION = "1.0.0"


@dataclass
class ExperimentInputs:
    graph: RoadGraph
    trips: TripStore
    profile: DemandProfile
    start: float


@dataclass
class ExperimentResult:
    out_dir: Path
    rows: List[Dict[str, Any]] = field(default_factory=list)
    cells: List[Dict[str, Any]] = field(default_factory=list)
    manifest: Dict[str, Any] = field(default_factory=dict)

    @property
    def metrics_path(self) -> Path:
        return self.out_dir / 'metrics.csv'


def cell_name(method: DispatchMethod, n_vehicles: int, activation: ActivationKind) -> str:
    return f"{method.value}_n{n_vehicles}_{activation.value}"


def check_inputs(cfg: ExperimentConfig) -> Dict[str, Path]:
    return {
        'nodes': check_file(cfg.paths.nodes, 'node'),
        'edges': check_file(cfg.paths.edges, 'edge'),
        'trips': check_file(cfg.paths.trips, 'trip')
    }


def resolve_start(cfg: ExperimentConfig, trips: TripStore) -> float:
    """Configured start, else midnight after the history days, else the first trip's batch."""
    if cfg.sim.start is not None:
        return float(cfg.sim.start)
    if len(trips) == 0:
        return 0.0
    first = float(trips.times[0])
    if cfg.history_days > 0:
        return float(np.floor(first / SECONDS_PER_DAY) + cfg.history_days) * SECONDS_PER_DAY
    return float(np.floor(first / cfg.sim.batch_interval) * cfg.sim.batch_interval)


def load_inputs(cfg: ExperimentConfig) -> ExperimentInputs:
    files = check_inputs(cfg)
    g = load_graph(
        files['nodes'], files['edges'],
        slot_length=cfg.sim.slot_length,
        l_max=cfg.sim.l_max,
        reference_speed_mps=cfg.sim.reference_speed_mps
    )
    trips = ingest_trips(files['trips'], g, l_max=cfg.sim.l_max)
    start = resolve_start(cfg, trips)
    profile = build_demand_profile(
        trips, g.n_vertices,
        bucket_length=cfg.sim.forecast_window,
        lookahead=cfg.sim.lookahead,
        horizon=cfg.sim.relocation_horizon,
        before=start,
        days=cfg.history_days or None
    )
    logger.info(f"Simulation window starts at {format_timestamp(start)}")
    return ExperimentInputs(graph=g, trips=trips, profile=profile, start=start)


def run_cell(config_data: Dict[str, Any], method: str, n_vehicles: int, activation: str, out_dir: str) -> Dict[str, Any]:
    """One simulation of one sweep cell. Takes plain data so it can run in a worker process."""
    cfg = ExperimentConfig.from_dict(config_data)
    method_kind = DispatchMethod.parse(method)
    activation_kind = ActivationKind.parse(activation)
    name = cell_name(method_kind, n_vehicles, activation_kind)
    out = Path(out_dir)

    inputs = load_inputs(cfg)
    sim_cfg = replace(
        cfg.sim,
        method=method_kind,
        n_vehicles=int(n_vehicles),
        activation=activation_kind,
        start=inputs.start
    )
    recorder = PartitionRecorder(inputs.graph)
    with EventLog(out / 'events' / f'{name}.jsonl') as log:
        sim = DispatchSimulator(inputs.graph, inputs.trips, inputs.profile, sim_cfg, cfg.fda, log, recorder)
        report = sim.run()

    recorder.write(out / 'partitions' / f'{name}.csv', out / 'partitions' / f'{name}.jsonl')
    write_outcomes(sim.outcome_list(), out / 'outcomes' / f'{name}.csv', labels=inputs.graph.labels)
    checked = audit(log.records, max_wait=sim_cfg.max_wait, relocation_horizon=sim_cfg.relocation_horizon)

    logger.info(f"Cell {name}: R={report.served_ratio:.3f} over {report.n_requests} request(s)")
    return {
        'cell': name,
        'row': report.to_row(),
        'hourly': report.hourly_rows(),
        'timings': sim.timing_summary(),
        'log_digest': log.digest(),
        'audit': checked.to_dict()
    }


async def _run_cells_async(config_data: Dict[str, Any], cells: List[Tuple[str, int, str]],
                           out_dir: str, workers: int) -> List[Dict[str, Any]]:
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        tasks = [
            loop.run_in_executor(pool, run_cell, config_data, method, n_vehicles, activation, out_dir)
            for method, n_vehicles, activation in cells
        ]
        return list(await asyncio.gather(*tasks))


def build_manifest(cfg: ExperimentConfig, results: List[Dict[str, Any]]) -> Dict[str, Any]:
    config_data = cfg.to_dict()
    files = check_inputs(cfg)
    return {
        'schema_version': SCHEMA_VERSION,
        'name': cfg.name,
        'code_version': CODE_VERSION,
        'config_hash': generate_hash(canonical_json(config_data), length=64),
        'config': config_data,
        'seed': cfg.sim.seed,
        'data_hashes': {key: hash_file(path, length=64) for key, path in files.items()},
        'cells': [
            {'cell': r['cell'], 'log_digest': r['log_digest'], 'audit_ok': r['audit']['ok']}
            for r in results
        ],
        'rss_bytes': psutil.Process().memory_info().rss
    }


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg.validate()
    check_inputs(cfg)

    out = Path(cfg.paths.out_dir)
    os.makedirs(out, exist_ok=True)
    config_data = cfg.to_dict()
    cells = [(m.value, n, a.value) for m, n, a in cfg.cells()]
    logger.info(f"Running experiment '{cfg.name}': {len(cells)} cell(s), {workers} worker(s), output in {out}")

    process = psutil.Process()
    cpu_before = process.cpu_times()
    if workers > 1 and len(cells) > 1:
        results = asyncio.run(_run_cells_async(config_data, cells, str(out), min(workers, len(cells))))
    else:
        results = [run_cell(config_data, m, n, a, str(out)) for m, n, a in cells]
    cpu_after = process.cpu_times()

    write_metrics([r['row'] for r in results], out / 'metrics.csv')
    write_hourly([r['hourly'] for r in results], out / 'hourly.csv')
    write_json({r['cell']: r['timings'] for r in results}, out / 'timings.json')
    manifest = build_manifest(cfg, results)
    write_json(manifest, out / 'manifest.json')

    failed = [r['cell'] for r in results if not r['audit']['ok']]
    if failed:
        logger.warning(f"Event log audit failed for {len(failed)} cell(s): {', '.join(failed)}")
    cpu = (cpu_after.user - cpu_before.user) + (cpu_after.system - cpu_before.system)
    logger.info(
        f"Experiment '{cfg.name}' finished: {len(results)} cell(s), main-process CPU {format_duration(cpu)}, "
        f"RSS {format_bytes(manifest['rss_bytes'])}"
    )
    return ExperimentResult(out_dir=out, rows=[r['row'] for r in results], cells=results, manifest=manifest)
