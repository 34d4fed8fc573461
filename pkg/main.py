"""
Fleet Rebalancer
Command-line entry point for dispatch experiments
"""

import os
import sys
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from src.errors import ConfigError, DataMismatchError
from src.experiments.compare import compare_methods
from src.experiments.config_loader import ENV_LOG_LEVEL, ENV_OUT_DIR, cli_overrides, load_config, workers_from_env
from src.experiments.replay import replay
from src.experiments.runner import run_experiment
from src.experiments.scenario import build_scenario, write_scenario
from src.utils.helpers import parse_duration

load_dotenv()

logger = logging.getLogger('fleet_rebalancer')

COMMANDS = ('run', 'compare', 'replay', 'scenario')
EXIT_OK = 0
EXIT_AUDIT_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_INTERRUPTED = 130


def setup_logging(out_dir: str):
    log_dir = Path(out_dir) / 'logs'
    os.makedirs(log_dir, exist_ok=True)
    level = os.getenv(ENV_LOG_LEVEL, 'INFO').upper()

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(log_dir / 'dispatch.log', mode='a', encoding='utf-8')
        ],
        force=True
    )


def _duration_arg(value: str) -> float:
    seconds = parse_duration(value)
    if seconds is None:
        raise argparse.ArgumentTypeError(f"not a duration: {value!r}")
    return seconds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fleet-rebalancer', description='Ride-hailing dispatch experiments')
    commands = parser.add_subparsers(dest='command')

    run = commands.add_parser('run', help='run every sweep cell of an experiment')
    run.add_argument('--config', help='experiment YAML file')
    run.add_argument('--method', help='comma-separated methods: dfda, fda, pic, none')
    run.add_argument('--vehicles', help='comma-separated fleet sizes')
    run.add_argument('--activation', help='comma-separated activations: ignore, identity, sigmoid, softplus, relu')
    run.add_argument('--seed', type=int, help='random seed')
    run.add_argument('--out', help='output directory')
    run.add_argument('--workers', type=int, help='worker processes for sweep cells')

    compare = commands.add_parser('compare', help='compare finished runs')
    compare.add_argument('runs', nargs='+', help='run output directories')
    compare.add_argument('--out', help='where to write comparison.csv and hourly_diff.csv')

    replay_cmd = commands.add_parser('replay', help='recompute metrics from an event log and audit it')
    replay_cmd.add_argument('log', help='event log (.jsonl)')
    replay_cmd.add_argument('--max-wait', type=float, help='override the wait limit recorded in the log')
    replay_cmd.add_argument('--relocation-horizon', type=float, help='override the relocation horizon recorded in the log')

    scenario = commands.add_parser('scenario', help='write a synthetic imbalanced-demand scenario')
    scenario.add_argument('--out', default='data/synthetic', help='scenario directory')
    scenario.add_argument('--rows', type=int, default=10)
    scenario.add_argument('--cols', type=int, default=10)
    scenario.add_argument('--requests', type=int, default=600, help='requests per simulated window')
    scenario.add_argument('--history-days', type=int, default=7)
    scenario.add_argument('--hotspot-share', type=float, default=0.8, help='share of pickups near the hotspots')
    scenario.add_argument('--surge', type=int, default=0, help='extra requests near the hotspots in one burst')
    scenario.add_argument('--surge-offset', type=_duration_arg, default='60m', help='burst start after the window start')
    scenario.add_argument('--surge-length', type=_duration_arg, default='20m')
    scenario.add_argument('--vehicles', type=int, default=40)
    scenario.add_argument('--k', type=int, default=4)
    scenario.add_argument('--seed', type=int, default=0)
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or (argv[0] not in COMMANDS and argv[0] not in ('-h', '--help')):
        argv.insert(0, 'run')
    return build_parser().parse_args(argv)


def cmd_run(args: argparse.Namespace) -> int:
    overrides = cli_overrides(args.method, args.vehicles, args.activation, args.seed, args.out)
    cfg = load_config(args.config, overrides=overrides)
    setup_logging(cfg.paths.out_dir)
    workers = args.workers if args.workers is not None else workers_from_env()
    if workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {workers}")

    result = run_experiment(cfg, workers=workers)
    for row in result.rows:
        logger.info(
            f"{row['method']:>5} n={row['n_vehicles']:<5} {row['activation']:<8} "
            f"R={row['R']:.3f} VKM={row['VKM']:.1f} TKM={row['TKM']:.1f}"
        )
    logger.info(f"Reports written to {result.out_dir}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    out = args.out or args.runs[0]
    setup_logging(out)
    comparison = compare_methods(args.runs, out_dir=out)
    logger.info(f"Comparison against '{comparison.baseline}' written to {out}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    setup_logging(os.getenv(ENV_OUT_DIR, 'out'))
    report, checked = replay(args.log, max_wait=args.max_wait, relocation_horizon=args.relocation_horizon)
    logger.info(
        f"requests={report.n_requests} served={report.n_served} expired={report.n_expired} "
        f"R={report.served_ratio:.4f} VKM={report.vkm:.3f} TKM={report.tkm:.3f}"
    )
    for violation in checked.violations:
        logger.error(f"Audit: {violation}")
    return EXIT_OK if checked.ok else EXIT_AUDIT_FAILED


def cmd_scenario(args: argparse.Namespace) -> int:
    setup_logging(args.out)
    try:
        scenario = build_scenario(
            rows=args.rows,
            cols=args.cols,
            n_requests=args.requests,
            history_days=args.history_days,
            hotspot_share=args.hotspot_share,
            surge_requests=args.surge,
            surge_offset=args.surge_offset,
            surge_length=args.surge_length,
            seed=args.seed
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e
    paths = write_scenario(scenario, args.out, n_vehicles=args.vehicles, k=args.k)
    logger.info(f"Scenario config: {paths['config']}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    handlers = {
        'run': cmd_run,
        'compare': cmd_compare,
        'replay': cmd_replay,
        'scenario': cmd_scenario
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError, DataMismatchError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except KeyboardInterrupt:
        logger.info("Received keyboard interrupt, shutting down...")
        return EXIT_INTERRUPTED


if __name__ == '__main__':
    sys.exit(main())
