"""
Dispatch Simulator
Discrete-event loop with batch matching and periodic relocation of idle vehicles

The clock advances in batch_interval steps. At each boundary due events are applied
in time order (leg completions, expirations, new requests), then pending requests are
matched to vehicles, then idle vehicles are rebalanced on relocation boundaries.
"""

import heapq
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.dispatch.baselines import fda_ved_partition, pic_partition, similarity_graph
from src.dispatch.demand import region_gap
from src.dispatch.event_log import EventLog
from src.dispatch.matching import (
    Candidate,
    build_relocation_graph,
    build_request_vehicle_graph,
    max_bipartite_matching,
    surplus_vehicles,
)
from src.dispatch.metrics import compute_metrics
from src.dispatch.relocation import multi_restart_search
from src.errors import ConfigError
from src.models.config import DispatchMethod, FdaVedConfig, SimConfig
from src.models.demand import DemandProfile
from src.models.events import EventKind
from src.models.graph import RoadGraph
from src.models.metrics import MetricsReport, OperationTimings
from src.models.partition import Partition
from src.models.trip import TripOutcome, TripRequest, TripStatus, TripStore
from src.models.vehicle import Vehicle, VehicleState
from src.routing.road_graph import distance_matrix, path_km, shortest_path, travel_time

logger = logging.getLogger('dispatch_sim')

MATCH_BUDGET_SECONDS = 2.5
REBALANCE_BUDGET_SECONDS = 30.0
FLEET_STREAM = 0

PartitionSink = Callable[[int, float, Partition, np.ndarray], None]


@dataclass
class LegPath:
    vertices: List[int]
    offsets: np.ndarray


class DispatchSimulator:
    def __init__(
        self,
        g: RoadGraph,
        trips: TripStore,
        profile: DemandProfile,
        config: SimConfig,
        fda: Optional[FdaVedConfig] = None,
        log: Optional[EventLog] = None,
        partition_sink: Optional[PartitionSink] = None
    ):
        config.validate()
        self.g = g
        self.config = config
        self.fda = fda or FdaVedConfig()
        self.profile = profile
        self.log = log if log is not None else EventLog()
        self.partition_sink = partition_sink

        if config.start is not None:
            self.start = float(config.start)
        elif len(trips):
            self.start = float(np.floor(trips.times[0] / config.batch_interval) * config.batch_interval)
        else:
            self.start = 0.0
        self.end = self.start + config.duration
        self.now = self.start

        self.trips = trips.window(self.start, self.end)
        self._next_trip = 0
        self.pending: "OrderedDict[int, TripRequest]" = OrderedDict()
        self.outcomes: Dict[int, TripOutcome] = {}

        self.vehicles = self._place_fleet()
        self._legs: List[Tuple[float, int, int]] = []
        self._leg_token: Dict[int, int] = {v.id: 0 for v in self.vehicles}
        self._leg_paths: Dict[int, LegPath] = {}

        self.partition: Optional[Partition] = None
        self.cycle = 0
        self._all_pairs: Optional[Tuple[int, np.ndarray]] = None
        self._edge_times: Optional[Tuple[int, Dict[Tuple[int, int], float]]] = None

        self.timings = {
            'match': OperationTimings('match', MATCH_BUDGET_SECONDS),
            'rebalance': OperationTimings('rebalance', REBALANCE_BUDGET_SECONDS)
        }
        self._finished = False

    def _place_fleet(self) -> List[Vehicle]:
        n = self.config.n_vehicles
        if self.config.initial_positions is not None:
            labels = self.config.initial_positions
            if len(labels) != n:
                raise ConfigError(f"initial_positions lists {len(labels)} vertices for {n} vehicles")
            try:
                positions = [self.g.index_of(label) for label in labels]
            except KeyError as e:
                raise ConfigError(str(e)) from None
        else:
            rng = np.random.default_rng([self.config.seed, FLEET_STREAM])
            positions = rng.integers(0, self.g.n_vertices, size=n).tolist() if self.g.n_vertices else []
        return [Vehicle(id=i, location=int(p)) for i, p in enumerate(positions)]

    def _emit_start(self):
        self.log.append(
            self.start, EventKind.START,
            start=self.start,
            end=self.end,
            n_vehicles=self.config.n_vehicles,
            n_vertices=self.g.n_vertices,
            method=self.config.method.value,
            activation=self.config.activation.value,
            k=self.config.k,
            seed=self.config.seed,
            max_wait=self.config.max_wait,
            relocation_horizon=self.config.relocation_horizon,
            batch_interval=self.config.batch_interval,
            relocation_interval=self.config.relocation_interval,
            positions=[v.location for v in self.vehicles]
        )

    def _start_leg(self, vehicle: Vehicle, state: VehicleState, destination: int, begin: float,
                   duration: float, km: float, request_id: Optional[int] = None, target_subarea: Optional[int] = None):
        vehicle.start_leg(state, destination, begin, duration, km, request_id, target_subarea)
        self._leg_token[vehicle.id] += 1
        heapq.heappush(self._legs, (vehicle.busy_until, vehicle.id, self._leg_token[vehicle.id]))

    def _next_due(self, now: float) -> Optional[Tuple[float, int]]:
        """Earliest due item as (time, source); sources are 0 leg, 1 expiry, 2 request."""
        options = []
        while self._legs and self._legs[0][2] != self._leg_token[self._legs[0][1]]:
            heapq.heappop(self._legs)
        if self._legs and self._legs[0][0] <= now:
            options.append((self._legs[0][0], 0))
        if self.pending:
            first = next(iter(self.pending.values()))
            deadline = first.request_time + self.config.max_wait
            if deadline < now:
                options.append((deadline, 1))
        if self._next_trip < len(self.trips) and self.trips.times[self._next_trip] <= now:
            options.append((float(self.trips.times[self._next_trip]), 2))
        return min(options) if options else None

    def _process_due(self, now: float, admit: bool = True):
        while True:
            due = self._next_due(now)
            if due is None or (not admit and due[1] == 2):
                break
            t, source = due
            if source == 0:
                _, vehicle_id, _ = heapq.heappop(self._legs)
                self._complete_leg(self.vehicles[vehicle_id], t)
            elif source == 1:
                request_id, request = self.pending.popitem(last=False)
                self._expire(request, t, 'timeout')
            else:
                self._admit(self.trips.request(self._next_trip))
                self._next_trip += 1

    def _admit(self, request: TripRequest):
        self.outcomes[request.id] = TripOutcome(
            request_id=request.id,
            request_time=request.request_time,
            pickup=request.pickup,
            dropoff=request.dropoff
        )
        self.log.append(request.request_time, EventKind.REQUEST,
                        request=request.id, pickup=request.pickup, dropoff=request.dropoff)
        if not np.isfinite(travel_time(self.g, request.pickup, request.dropoff, request.request_time)):
            self._expire(request, request.request_time, 'unroutable')
            return
        self.pending[request.id] = request

    def _expire(self, request: TripRequest, t: float, reason: str):
        self.outcomes[request.id].status = TripStatus.EXPIRED
        self.log.append(t, EventKind.EXPIRE, request=request.id, reason=reason)

    def _complete_leg(self, vehicle: Vehicle, t: float):
        state = vehicle.state
        request_id = vehicle.request_id
        km = vehicle.finish_leg()
        self._leg_paths.pop(vehicle.id, None)

        if state == VehicleState.TO_PICKUP:
            outcome = self.outcomes[request_id]
            outcome.status = TripStatus.SERVED
            outcome.pickup_time = t
            outcome.vehicle_id = vehicle.id
            outcome.pickup_deadhead_km = km
            self.log.append(t, EventKind.PICKUP, km=km, request=request_id, vehicle=vehicle.id,
                            wait=t - outcome.request_time)

            duration = travel_time(self.g, outcome.pickup, outcome.dropoff, t)
            trip_km = path_km(self.g, outcome.pickup, outcome.dropoff, t)
            outcome.trip_km = trip_km
            self._start_leg(vehicle, VehicleState.WITH_PASSENGER, outcome.dropoff, t, duration, trip_km,
                            request_id=request_id)
        elif state == VehicleState.WITH_PASSENGER:
            self.log.append(t, EventKind.DROPOFF, km=km, request=request_id, vehicle=vehicle.id,
                            vertex=vehicle.location)
        elif state == VehicleState.RELOCATING:
            self.log.append(t, EventKind.ARRIVE, km=km, vehicle=vehicle.id, vertex=vehicle.location)

    def _projected(self, vehicle: Vehicle, now: float) -> Tuple[int, float, float]:
        """Next vertex a relocating vehicle reaches, when it gets there and the km driven by then."""
        path = self._leg_paths.get(vehicle.id)
        total = vehicle.busy_until - vehicle.leg_start
        if path is None or total <= 0 or len(path.vertices) < 2:
            return vehicle.destination, vehicle.busy_until, vehicle.leg_km
        elapsed = now - vehicle.leg_start
        i = int(np.searchsorted(path.offsets, elapsed, side='left'))
        i = min(max(i, 0), len(path.vertices) - 1)
        reached = float(path.offsets[i])
        return path.vertices[i], vehicle.leg_start + reached, vehicle.leg_km * reached / total

    def _candidates(self, now: float) -> List[Candidate]:
        candidates = []
        for v in self.vehicles:
            if v.state == VehicleState.FREE:
                candidates.append(Candidate(id=v.id, vertex=v.location, ready_at=now))
            elif v.state == VehicleState.RELOCATING and self.config.divertible:
                vertex, ready_at, _ = self._projected(v, now)
                candidates.append(Candidate(id=v.id, vertex=vertex, ready_at=max(now, ready_at)))
        return candidates

    def step(self, now: float) -> int:
        """Match pending requests to vehicles; returns the number of assignments."""
        requests = list(self.pending.values())
        if not requests:
            return 0

        with self.timings['match'].timer() as watch:
            candidates = {c.id: c for c in self._candidates(now)}
            bg = build_request_vehicle_graph(requests, candidates.values(), self.g, self.config.max_wait, now)
            matching = max_bipartite_matching(bg)

            for request_id, vehicle_id in matching.sorted_pairs():
                request = self.pending.pop(request_id)
                vehicle = self.vehicles[vehicle_id]
                candidate = candidates[vehicle_id]

                if vehicle.state == VehicleState.RELOCATING:
                    _, _, driven = self._projected(vehicle, now)
                    vehicle.odometer_km += driven
                    self.log.append(now, EventKind.DIVERT, km=driven, vehicle=vehicle.id,
                                    vertex=candidate.vertex, ready_at=candidate.ready_at)
                    self._leg_paths.pop(vehicle.id, None)
                    vehicle.location = candidate.vertex
                    vehicle.state = VehicleState.FREE
                    vehicle.target_subarea = None

                arrival = now + bg.costs[(request_id, vehicle_id)]
                km = path_km(self.g, candidate.vertex, request.pickup, now)
                self._start_leg(vehicle, VehicleState.TO_PICKUP, request.pickup, now, arrival - now, km,
                                request_id=request_id)
                self.log.append(now, EventKind.ASSIGN, request=request_id, vehicle=vehicle_id,
                                eta=arrival)

        if watch.exceeded:
            logger.warning(f"Matching batch at t={now:.0f} took {watch.elapsed:.2f}s (budget {MATCH_BUDGET_SECONDS}s)")
        self._process_due(now, admit=False)
        return matching.cardinality

    def _distances(self, now: float) -> np.ndarray:
        slot = self.g.slot_at(now)
        if self._all_pairs is None or self._all_pairs[0] != slot:
            self._all_pairs = (slot, distance_matrix(self.g, range(self.g.n_vertices), now).values)
        return self._all_pairs[1]

    def _partition(self, now: float, gaps: np.ndarray, D: np.ndarray) -> Optional[Partition]:
        method = self.config.method
        if method == DispatchMethod.NONE:
            return None
        if self.config.partition_once and self.partition is not None:
            return self.partition

        k = min(self.config.k, self.g.n_vertices)
        rng = np.random.default_rng([self.config.seed, self.cycle + 1])
        if method == DispatchMethod.DFDA:
            seeds = rng.integers(0, 2 ** 31 - 1, size=self.config.restarts).tolist()
            return multi_restart_search(
                self.g, k, gaps, self.config.activation, seeds, now,
                dm=D,
                weighted=self.config.weighted_update,
                max_iterations=self.config.max_iterations,
                workers=self.config.restart_workers
            )
        if method == DispatchMethod.FDA:
            cfg = self.fda.resolve(self.g.n_vertices, k, self.config.max_wait)
            return fda_ved_partition(self.g, cfg, now, dm=D)
        seed = int(rng.integers(0, 2 ** 31 - 1))
        return pic_partition(similarity_graph(self.g, now), k, seed, dm=D)

    def rebalance(self, now: float) -> List[Tuple[int, int]]:
        """Relocation orders as (vehicle, center) pairs."""
        if self.config.method == DispatchMethod.NONE:
            return []

        with self.timings['rebalance'].timer() as watch:
            D = self._distances(now)
            gaps = self.profile.gaps(now + self.config.lookahead)
            partition = self._partition(now, gaps, D)
            self.partition = partition
            self.cycle += 1
            self.log.append(now, EventKind.PARTITION, cycle=self.cycle, method=partition.method,
                            centers=list(partition.centers), objective=partition.objective)
            if self.partition_sink is not None:
                self.partition_sink(self.cycle, now, partition, gaps)

            supply = np.zeros(partition.k)
            for v in self.vehicles:
                if v.state == VehicleState.FREE:
                    supply[partition.subarea_of(v.location)] += 1
                elif v.state == VehicleState.RELOCATING and v.destination is not None:
                    supply[partition.subarea_of(v.destination)] += 1
            region = region_gap(partition, self.profile, supply, now, gaps=gaps)

            needy = [(j, partition.centers[j], float(region[j])) for j in range(partition.k) if region[j] > 0]
            if not needy:
                orders = []
            else:
                orders = self._relocate(now, partition, region, needy, D)

        if watch.exceeded:
            logger.warning(f"Rebalance at t={now:.0f} took {watch.elapsed:.2f}s (budget {REBALANCE_BUDGET_SECONDS}s)")
        return orders

    def _relocate(self, now: float, partition: Partition, region: np.ndarray,
                  needy: List[Tuple[int, int, float]], D: np.ndarray) -> List[Tuple[int, int]]:
        needy_centers = np.array([center for _, center, _ in needy], dtype=np.int64)
        free_by_subarea: Dict[int, List[Tuple[int, float]]] = {}
        for v in self.vehicles:
            if v.state != VehicleState.FREE:
                continue
            nearest = float(D[v.location, needy_centers].min())
            free_by_subarea.setdefault(partition.subarea_of(v.location), []).append((v.id, nearest))

        offered = surplus_vehicles(free_by_subarea, region)
        idle = [Candidate(id=i, vertex=self.vehicles[i].location, ready_at=now) for i in offered]
        bg = build_relocation_graph(idle, needy, self.g, self.config.relocation_horizon, now)
        matching = max_bipartite_matching(bg)

        orders = []
        for vehicle_id, slot in matching.sorted_pairs():
            vehicle = self.vehicles[vehicle_id]
            meta = bg.right_meta[slot]
            duration = bg.costs[(vehicle_id, slot)]
            origin = vehicle.location
            km = path_km(self.g, origin, meta.center, now)
            self._start_leg(vehicle, VehicleState.RELOCATING, meta.center, now, duration, km,
                            target_subarea=meta.subarea)
            self._remember_path(vehicle_id, origin, meta.center, now)
            self.log.append(now, EventKind.RELOCATE, vehicle=vehicle_id, subarea=meta.subarea,
                            center=meta.center, eta=now + duration)
            orders.append((vehicle_id, meta.center))
        if orders:
            logger.debug(f"t={now:.0f}: {len(orders)} relocation order(s) from {len(offered)} idle vehicle(s)")
        return orders

    def _edge_table(self, slot: int) -> Dict[Tuple[int, int], float]:
        if self._edge_times is None or self._edge_times[0] != slot:
            weights = self.g.edge_times[:, slot]
            table = {(int(u), int(v)): float(w) for u, v, w in zip(self.g.edge_from, self.g.edge_to, weights)}
            self._edge_times = (slot, table)
        return self._edge_times[1]

    def _remember_path(self, vehicle_id: int, origin: int, dest: int, now: float):
        path = shortest_path(self.g, origin, dest, now)
        if path is None:
            return
        table = self._edge_table(self.g.slot_at(now))
        times = [0.0]
        for u, v in zip(path, path[1:]):
            times.append(times[-1] + table[(u, v)])
        self._leg_paths[vehicle_id] = LegPath(vertices=list(path), offsets=np.array(times))

    def boundaries(self) -> List[float]:
        count = int(np.floor(self.config.duration / self.config.batch_interval + 1e-9))
        return [self.start + i * self.config.batch_interval for i in range(count + 1)]

    def is_relocation_boundary(self, now: float) -> bool:
        ratio = int(round(self.config.relocation_interval / self.config.batch_interval))
        index = int(round((now - self.start) / self.config.batch_interval))
        return index % ratio == 0

    def run(self) -> MetricsReport:
        if self._finished:
            raise RuntimeError("Simulation already ran")
        self._emit_start()
        logger.info(
            f"Simulating {len(self.trips)} request(s) with {len(self.vehicles)} vehicle(s), "
            f"method={self.config.method.value}, activation={self.config.activation.value}, seed={self.config.seed}"
        )

        for now in self.boundaries():
            self.now = now
            self._process_due(now)
            self.step(now)
            if now < self.end and self.is_relocation_boundary(now):
                self.rebalance(now)

        self.now = self.end
        self._process_due(self.end)
        for request in list(self.pending.values()):
            self._expire(request, self.end, 'horizon')
        self.pending.clear()

        while self._next_due(np.inf) is not None:
            t, _ = self._next_due(np.inf)
            _, vehicle_id, _ = heapq.heappop(self._legs)
            self._complete_leg(self.vehicles[vehicle_id], t)

        final = max(self.end, self.log.records[-1].time if len(self.log) else self.end)
        self.log.append(final, EventKind.END, served=sum(1 for o in self.outcomes.values() if o.served),
                        requests=len(self.outcomes))
        self.log.close()
        self._finished = True

        report = compute_metrics(self.log.records, n_vehicles=self.config.n_vehicles)
        logger.info(
            f"Run finished: R={report.served_ratio:.3f}, VKM={report.vkm:.1f}, TKM={report.tkm:.1f}, "
            f"rho={report.rho if report.rho is None else round(report.rho, 3)}"
        )
        return report

    def outcome_list(self) -> List[TripOutcome]:
        return [self.outcomes[i] for i in sorted(self.outcomes)]

    def timing_summary(self) -> dict:
        return {name: t.to_dict() for name, t in self.timings.items()}


def step(sim: DispatchSimulator, now: float) -> int:
    sim.now = now
    sim._process_due(now)
    return sim.step(now)


def rebalance(sim: DispatchSimulator, now: float) -> List[Tuple[int, int]]:
    return sim.rebalance(now)


def run(sim: DispatchSimulator) -> Tuple[MetricsReport, EventLog]:
    report = sim.run()
    return report, sim.log
