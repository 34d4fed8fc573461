"""
Dispatch Benchmark Script
Times one rebalance cycle and one matching batch at city-like sizes on the current machine
"""

import argparse
import logging
import os
import statistics
import sys
import time

import numpy as np
import psutil

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.dispatch.matching import Candidate, build_request_vehicle_graph, max_bipartite_matching
from src.dispatch.relocation import multi_restart_search
from src.experiments.scenario import grid_graph
from src.models.partition import ActivationKind
from src.models.trip import TripRequest
from src.routing.road_graph import distance_matrix

logger = logging.getLogger('benchmark')

REBALANCE_BUDGET_SECONDS = 30.0
MATCH_BUDGET_SECONDS = 2.5


class Benchmark:
    def __init__(self, side: int = 45, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.g = grid_graph(side, side, edge_seconds=60.0, seed=seed, jitter=0.5)
        self.results = {}

    def _record(self, name: str, times: list, budget: float):
        self.results[name] = {
            'runs': len(times),
            'avg_s': statistics.mean(times),
            'max_s': max(times),
            'budget_s': budget
        }
        print(f"   Avg: {statistics.mean(times):.3f}s  Max: {max(times):.3f}s  (budget {budget:.1f}s)")
        if max(times) > budget:
            logger.warning(f"{name} exceeded its soft budget: {max(times):.2f}s > {budget:.1f}s")

    def benchmark_rebalance(self, k: int = 37, restarts: int = 8, runs: int = 1):
        """All-pairs travel times plus the multi-restart center search"""
        n = self.g.n_vertices
        print(f"\n🧭 Testing rebalance cycle (n={n}, k={k}, {restarts} restarts)...")
        gaps = self.rng.normal(0.0, 2.0, n)
        seeds = list(range(restarts))

        times = []
        for i in range(runs):
            start = time.perf_counter()
            dm = distance_matrix(self.g, range(n), 8 * 3600.0 + i)
            partition = multi_restart_search(self.g, k, gaps, ActivationKind.RELU, seeds, 0.0, dm=dm)
            times.append(time.perf_counter() - start)
        print(f"   Objective: {partition.objective:,.1f} after {partition.iterations} iteration(s)")
        self._record('rebalance', times, REBALANCE_BUDGET_SECONDS)

    def benchmark_matching(self, n_vehicles: int = 1000, n_requests: int = 300, runs: int = 5):
        """Request-vehicle graph construction plus Hopcroft-Karp"""
        n = self.g.n_vertices
        print(f"\n🚕 Testing matching batch ({n_vehicles} vehicles, {n_requests} requests)...")

        times = []
        for i in range(runs):
            now = 8 * 3600.0 + 60.0 * i
            vehicles = [Candidate(id=v, vertex=int(x), ready_at=now) for v, x in enumerate(self.rng.integers(0, n, n_vehicles))]
            pickups = self.rng.integers(0, n, n_requests)
            requests = [
                TripRequest(id=r, request_time=now - 60.0, pickup=int(p), dropoff=int((p + 1) % n))
                for r, p in enumerate(pickups)
            ]
            start = time.perf_counter()
            bg = build_request_vehicle_graph(requests, vehicles, self.g, 300.0, now)
            matching = max_bipartite_matching(bg)
            times.append(time.perf_counter() - start)
        print(f"   Matched {matching.cardinality}/{n_requests} over {bg.n_edges:,} edges")
        self._record('matching', times, MATCH_BUDGET_SECONDS)

    def print_summary(self):
        print("\n" + "=" * 60)
        print("📊 BENCHMARK SUMMARY")
        print("=" * 60)

        mem = psutil.Process().memory_info()
        print(f"\n💻 System Info:")
        print(f"   CPU cores: {psutil.cpu_count()}")
        print(f"   RAM total: {psutil.virtual_memory().total / (1024**3):.1f} GB")
        print(f"   RAM used by test: {mem.rss / (1024**2):.1f} MB")

        print(f"\n📈 Results:")
        print(f"   {'Operation':<15} {'Avg':>10} {'Max':>10} {'Budget':>10}")
        print(f"   {'-'*15} {'-'*10} {'-'*10} {'-'*10}")
        for op, data in self.results.items():
            flag = "" if data['max_s'] <= data['budget_s'] else "  ⚠️"
            print(f"   {op:<15} {data['avg_s']:>9.3f}s {data['max_s']:>9.3f}s {data['budget_s']:>9.1f}s{flag}")

        cache = self.g.route_cache.stats()
        print(f"\n🗄️ Route cache: {cache}")


def main():
    parser = argparse.ArgumentParser(description='Time the rebalance cycle and the matching batch')
    parser.add_argument('--side', type=int, default=45, help='grid side; 45 gives 2,025 vertices')
    parser.add_argument('--k', type=int, default=37)
    parser.add_argument('--restarts', type=int, default=8)
    parser.add_argument('--vehicles', type=int, default=1000)
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    print("=" * 60)
    print("🔥 Dispatch Benchmark")
    print("=" * 60)

    bench = Benchmark(side=args.side, seed=args.seed)
    bench.benchmark_rebalance(k=args.k, restarts=args.restarts)
    bench.benchmark_matching(n_vehicles=args.vehicles)
    bench.print_summary()


if __name__ == "__main__":
    main()
