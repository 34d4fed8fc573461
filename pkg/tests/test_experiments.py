import json

import numpy as np
import pandas as pd
import pytest
import yaml

import main as cli
from src.errors import ConfigError, DataMismatchError
from src.experiments.compare import compare_methods
from src.experiments.config_loader import cli_overrides, load_config, read_config_file, workers_from_env
from src.experiments.replay import replay
from src.experiments.runner import cell_name, resolve_start, run_experiment
from src.experiments.scenario import DEFAULT_START, build_scenario, write_scenario
from src.models.config import DispatchMethod, ExperimentConfig
from src.models.partition import ActivationKind
from src.models.trip import TripStore
from tests.conftest import TOY_DIR


def toy_config(out_dir, **sim):
    config = {
        'schema_version': 1,
        'name': 'toy',
        'history_days': 0,
        'paths': {
            'nodes': str(TOY_DIR / 'nodes.csv'),
            'edges': str(TOY_DIR / 'edges.csv'),
            'trips': str(TOY_DIR / 'trips.csv'),
            'out_dir': str(out_dir)
        },
        'sim': {
            'n_vehicles': 2,
            'k': 2,
            'seed': 7,
            'restarts': 2,
            'start': '2024-01-08T08:00:00Z',
            'duration': '30m',
            **sim
        },
        'sweep': {'methods': ['dfda', 'none'], 'vehicles': [2], 'activations': ['relu']}
    }
    return config


def write_yaml(path, data):
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(data, f)
    return path


def test_durations_and_timestamps_are_parsed(tmp_path):
    path = write_yaml(tmp_path / 'c.yaml', toy_config(tmp_path / 'out', max_wait='10m'))
    cfg = load_config(path, env={})
    assert cfg.sim.max_wait == 600.0
    assert cfg.sim.duration == 1800.0
    assert cfg.sim.start == 1704700800.0


def test_override_precedence(tmp_path):
    path = write_yaml(tmp_path / 'c.yaml', toy_config(tmp_path / 'out'))
    assert load_config(path, env={}).sim.seed == 7
    assert load_config(path, env={'DISPATCH_SEED': '5'}).sim.seed == 5
    assert load_config(path, env={'DISPATCH_SEED': '5'}, overrides=cli_overrides(seed=9)).sim.seed == 9

    cfg = load_config(path, env={'DISPATCH_OUT_DIR': str(tmp_path / 'env')}, overrides=cli_overrides(out=str(tmp_path / 'cli')))
    assert cfg.paths.out_dir == str(tmp_path / 'cli')


def test_cli_axes_replace_the_sweep(tmp_path):
    path = write_yaml(tmp_path / 'c.yaml', toy_config(tmp_path / 'out'))
    cfg = load_config(path, env={}, overrides=cli_overrides(method='fda, pic', vehicles='1,3', activation='identity'))
    assert cfg.cells() == [
        (DispatchMethod.FDA, 1, ActivationKind.IDENTITY),
        (DispatchMethod.FDA, 3, ActivationKind.IDENTITY),
        (DispatchMethod.PIC, 1, ActivationKind.IDENTITY),
        (DispatchMethod.PIC, 3, ActivationKind.IDENTITY),
    ]


@pytest.mark.parametrize('change', [
    {'sim': {'color': 'red'}},
    {'sim': {'method': 'greedy'}},
    {'sim': {'max_wait': 'soon'}},
    {'sim': {'batch_interval': 70}},
    {'sim': {'k': 0}},
    {'schema_version': 2},
    {'sweep': {'activations': ['tanh']}},
])
def test_invalid_configs_are_rejected(tmp_path, change):
    data = toy_config(tmp_path / 'out')
    for key, value in change.items():
        if isinstance(value, dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    with pytest.raises(ConfigError):
        load_config(write_yaml(tmp_path / 'c.yaml', data), env={})


def test_missing_schema_version(tmp_path):
    data = toy_config(tmp_path / 'out')
    del data['schema_version']
    with pytest.raises(ConfigError):
        load_config(write_yaml(tmp_path / 'c.yaml', data), env={})


def test_unreadable_config_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_config_file(tmp_path / 'absent.yaml')
    (tmp_path / 'empty.yaml').write_text('')
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / 'empty.yaml')
    (tmp_path / 'list.yaml').write_text('- 1\n- 2\n')
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / 'list.yaml')
    (tmp_path / 'broken.yaml').write_text('sim: [1, 2\n')
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / 'broken.yaml')


def test_workers_from_env():
    assert workers_from_env({}) == 1
    assert workers_from_env({'DISPATCH_WORKERS': '3'}) == 3
    with pytest.raises(ConfigError):
        workers_from_env({'DISPATCH_WORKERS': '0'})
    with pytest.raises(ConfigError):
        workers_from_env({'DISPATCH_WORKERS': 'many'})


def test_start_after_history_days():
    cfg = ExperimentConfig.from_dict({'schema_version': 1, 'history_days': 2})
    trips = TripStore(times=np.array([DEFAULT_START + 8 * 3600]), pickups=np.array([0]), dropoffs=np.array([1]))
    assert resolve_start(cfg, trips) == DEFAULT_START + 2 * 86400
    cfg.history_days = 0
    assert resolve_start(cfg, trips) == DEFAULT_START + 8 * 3600


def test_cell_names():
    assert cell_name(DispatchMethod.DFDA, 30, ActivationKind.RELU) == 'dfda_n30_relu'


@pytest.fixture
def toy_run(tmp_path):
    path = write_yaml(tmp_path / 'c.yaml', toy_config(tmp_path / 'run'))
    return run_experiment(load_config(path, env={}))


def test_run_writes_reports(toy_run):
    out = toy_run.out_dir
    metrics = pd.read_csv(out / 'metrics.csv')
    assert list(metrics['method']) == ['dfda', 'none']
    assert (metrics['requests'] == 6).all()

    manifest = json.loads((out / 'manifest.json').read_text())
    assert len(manifest['config_hash']) == 64
    assert set(manifest['data_hashes']) == {'nodes', 'edges', 'trips'}
    assert all(len(h) == 64 for h in manifest['data_hashes'].values())
    assert [c['cell'] for c in manifest['cells']] == ['dfda_n2_relu', 'none_n2_relu']
    assert all(c['audit_ok'] for c in manifest['cells'])

    for name in ('dfda_n2_relu', 'none_n2_relu'):
        assert (out / 'events' / f'{name}.jsonl').exists()
        assert (out / 'outcomes' / f'{name}.csv').exists()
    partitions = pd.read_csv(out / 'partitions' / 'dfda_n2_relu.csv')
    assert set(partitions['vertex_id']) == {'A', 'B', 'C', 'D'}
    assert partitions.groupby('cycle')['is_center'].sum().eq(2).all()
    summaries = [json.loads(line) for line in (out / 'partitions' / 'dfda_n2_relu.jsonl').read_text().splitlines()]
    assert [s['cycle'] for s in summaries] == sorted(partitions['cycle'].unique().tolist())
    assert all(set(s) == {'cycle', 'time', 'method', 'objective', 'iterations', 'seed', 'activation'} for s in summaries)
    assert all(s['activation'] == 'relu' and s['method'] == 'dfda' for s in summaries)
    assert manifest['rss_bytes'] > 0
    assert 'match' in json.loads((out / 'timings.json').read_text())['dfda_n2_relu']


def test_reruns_are_byte_identical(tmp_path):
    first = run_experiment(load_config(write_yaml(tmp_path / 'a.yaml', toy_config(tmp_path / 'a')), env={}))
    second = run_experiment(load_config(write_yaml(tmp_path / 'b.yaml', toy_config(tmp_path / 'b')), env={}))
    for name in ('metrics.csv', 'hourly.csv', 'events/dfda_n2_relu.jsonl', 'partitions/dfda_n2_relu.csv',
                 'partitions/dfda_n2_relu.jsonl'):
        assert (first.out_dir / name).read_bytes() == (second.out_dir / name).read_bytes()


def test_replay_matches_the_run(toy_run):
    report, checked = replay(toy_run.out_dir / 'events' / 'dfda_n2_relu.jsonl')
    row = toy_run.rows[0]
    assert checked.ok
    assert report.served_ratio == pytest.approx(row['R'])
    assert report.vkm == pytest.approx(row['VKM'])


def test_compare_against_no_rebalancing(toy_run):
    comparison = compare_methods([toy_run.out_dir], out_dir=toy_run.out_dir)
    assert comparison.baseline == 'none'
    baseline = comparison.table[comparison.table['variant'] == 'none']
    assert baseline['R_diff'].iloc[0] == 0.0
    assert (toy_run.out_dir / 'comparison.csv').exists()
    assert (toy_run.out_dir / 'hourly_diff.csv').exists()


def test_compare_identical_runs(tmp_path):
    for name in ('a', 'b'):
        run_experiment(load_config(write_yaml(tmp_path / f'{name}.yaml', toy_config(tmp_path / name)), env={}))
    comparison = compare_methods([tmp_path / 'a', tmp_path / 'b'])
    assert comparison.baseline == 'a/none'
    table = comparison.table.set_index('variant')
    assert table.loc['b/none', 'R_diff'] == 0.0
    assert table.loc['b/dfda', 'R_diff'] == table.loc['a/dfda', 'R_diff']


def test_compare_refuses_different_data(tmp_path):
    run_experiment(load_config(write_yaml(tmp_path / 'a.yaml', toy_config(tmp_path / 'a')), env={}))
    trips = pd.read_csv(TOY_DIR / 'trips.csv').iloc[:-1]
    trips.to_csv(tmp_path / 'fewer.csv', index=False)
    data = toy_config(tmp_path / 'b')
    data['paths']['trips'] = str(tmp_path / 'fewer.csv')
    run_experiment(load_config(write_yaml(tmp_path / 'b.yaml', data), env={}))
    with pytest.raises(DataMismatchError):
        compare_methods([tmp_path / 'a', tmp_path / 'b'])


def test_written_scenario_runs(tmp_path):
    scenario = build_scenario(rows=3, cols=3, n_requests=20, duration=600.0, history_days=1, seed=2)
    paths = write_scenario(scenario, tmp_path / 'scenario', n_vehicles=3, k=2)
    cfg = load_config(paths['config'], env={})
    assert cfg.history_days == 1
    assert cfg.sim.start == scenario.start
    assert len(pd.read_csv(paths['trips'])) == 40
    assert [m.value for m, _, _ in cfg.cells()] == ['dfda', 'fda', 'none']


def test_surge_lands_in_its_window_near_the_hotspots():
    scenario = build_scenario(
        rows=4, cols=4, n_requests=30, duration=1800.0, history_days=1, hotspot_share=0.0,
        surge_requests=20, surge_offset=600.0, surge_length=300.0, surge_share=1.0, seed=3
    )
    trips = scenario.trips
    assert len(trips) == 50
    assert len(scenario.history) == 50
    assert trips['request_time'].is_monotonic_increasing

    area = {'r0c0', 'r0c1', 'r0c2', 'r1c0', 'r1c1', 'r1c2', 'r2c0', 'r2c1'}
    window = trips['request_time'].between(scenario.start + 600, scenario.start + 899)
    assert (window & trips['pickup_node'].isin(area)).sum() >= 20
    assert (trips['pickup_node'] != trips['dropoff_node']).all()


def test_surge_must_fit_the_window():
    with pytest.raises(ValueError):
        build_scenario(rows=3, cols=3, n_requests=10, duration=600.0, history_days=1,
                       surge_requests=5, surge_offset=500.0, surge_length=200.0)
    with pytest.raises(ValueError):
        build_scenario(rows=3, cols=3, n_requests=10, duration=600.0, history_days=1,
                       surge_requests=5, surge_length=0.0)


def test_cli_defaults_to_run():
    assert cli.parse_args(['--config', 'x.yaml']).command == 'run'
    assert cli.parse_args(['compare', 'out']).runs == ['out']


def test_cli_bad_input_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, 'setup_logging', lambda out_dir: None)
    assert cli.main(['run', '--config', str(tmp_path / 'absent.yaml')]) == cli.EXIT_BAD_INPUT

    data = toy_config(tmp_path / 'out')
    data['paths']['trips'] = str(tmp_path / 'missing.csv')
    assert cli.main(['run', '--config', str(write_yaml(tmp_path / 'c.yaml', data))]) == cli.EXIT_BAD_INPUT


def test_cli_replay_exit_codes(toy_run, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, 'setup_logging', lambda out_dir: None)
    log = toy_run.out_dir / 'events' / 'none_n2_relu.jsonl'
    assert cli.main(['replay', str(log)]) == cli.EXIT_OK

    lines = log.read_text().splitlines()
    truncated = tmp_path / 'truncated.jsonl'
    truncated.write_text('\n'.join(line for line in lines if '"kind":"expire"' not in line and '"kind":"pickup"' not in line) + '\n')
    requests = sum('"kind":"request"' in line for line in lines)
    assert requests > 0
    assert cli.main(['replay', str(truncated)]) == cli.EXIT_AUDIT_FAILED


def test_cli_scenario_surge_flags(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, 'setup_logging', lambda out_dir: None)
    args = cli.parse_args(['scenario', '--surge', '30', '--surge-offset', '45m', '--surge-length', '600'])
    assert (args.surge, args.surge_offset, args.surge_length) == (30, 2700.0, 600.0)
    assert cli.parse_args(['scenario']).surge_offset == 3600.0

    out = tmp_path / 'scenario'
    argv = ['scenario', '--out', str(out), '--rows', '3', '--cols', '3', '--requests', '10', '--history-days', '1']
    assert cli.main(argv + ['--surge', '5', '--surge-offset', '3h']) == cli.EXIT_BAD_INPUT
    assert cli.main(argv + ['--surge', '5', '--surge-offset', '10m', '--surge-length', '5m']) == cli.EXIT_OK
    assert len(pd.read_csv(out / 'trips.csv')) == 2 * 15
