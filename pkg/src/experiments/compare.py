"""
Method Comparison
Side-by-side metrics of finished runs and hourly serving-ratio differences
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from src.errors import DataMismatchError
from src.experiments.export import write_csv

logger = logging.getLogger('experiments')

PathLike = Union[str, Path]

KEY_COLUMNS = ['n_vehicles', 'activation']
COMPARED = ['R', 'rho', 'kappa', 'tau']
BASELINE_METHOD = 'none'


@dataclass
class Comparison:
    baseline: str
    table: pd.DataFrame
    hourly: pd.DataFrame

    def write(self, out_dir: PathLike):
        out = Path(out_dir)
        write_csv(self.table, out / 'comparison.csv')
        write_csv(self.hourly, out / 'hourly_diff.csv')


def _load_run(run_dir: Path):
    manifest_path = run_dir / 'manifest.json'
    if not manifest_path.exists():
        raise FileNotFoundError(f"run manifest not found: {manifest_path}")
    with open(manifest_path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    metrics = pd.read_csv(run_dir / 'metrics.csv')
    hourly = pd.read_csv(run_dir / 'hourly.csv')
    return manifest, metrics, hourly


def _check_compatible(run_dirs: Sequence[Path], manifests: List[dict]):
    reference = manifests[0]
    for run_dir, manifest in zip(run_dirs[1:], manifests[1:]):
        if manifest.get('data_hashes') != reference.get('data_hashes'):
            raise DataMismatchError(
                f"{run_dir} was produced from different input data than {run_dirs[0]}; refusing to compare"
            )
        if manifest.get('seed') != reference.get('seed'):
            raise DataMismatchError(
                f"{run_dir} used seed {manifest.get('seed')}, {run_dirs[0]} used {reference.get('seed')}"
            )


def _pick_baseline(variants: Sequence[str], methods: pd.Series) -> str:
    none_variants = sorted(v for v, m in zip(variants, methods) if m == BASELINE_METHOD)
    return none_variants[0] if none_variants else sorted(variants)[0]


def compare_methods(run_dirs: Sequence[PathLike], out_dir: Optional[PathLike] = None) -> Comparison:
    """Compare every (method, fleet size, activation) cell against the 'none' method or the first variant.

    Runs must come from the same input data and seed. Results from several run directories are
    labelled '<run dir>/<method>' so identical methods stay apart.
    """
    dirs = [Path(d) for d in run_dirs]
    if not dirs:
        raise ValueError("compare_methods needs at least one run directory")
    loaded = [_load_run(d) for d in dirs]
    _check_compatible(dirs, [m for m, _, _ in loaded])

    metrics_parts = []
    hourly_parts = []
    for run_dir, (_, metrics, hourly) in zip(dirs, loaded):
        prefix = f"{run_dir.name}/" if len(dirs) > 1 else ""
        metrics = metrics.assign(variant=prefix + metrics['method'].astype(str))
        hourly = hourly.assign(variant=prefix + hourly['method'].astype(str))
        metrics_parts.append(metrics)
        hourly_parts.append(hourly)
    metrics = pd.concat(metrics_parts, ignore_index=True)
    hourly = pd.concat(hourly_parts, ignore_index=True)

    if metrics['variant'].nunique() < 2:
        logger.warning("Only one method to compare, difference columns will be zero")
    baseline = _pick_baseline(list(metrics['variant']), metrics['method'])

    table = metrics.groupby(['variant', 'method'] + KEY_COLUMNS, as_index=False)[COMPARED].mean()
    reference = table[table['variant'] == baseline][KEY_COLUMNS + COMPARED]
    table = table.merge(reference, on=KEY_COLUMNS, how='left', suffixes=('', '_baseline'))
    for column in COMPARED:
        table[f'{column}_diff'] = table[column] - table[f'{column}_baseline']
    table = table.drop(columns=[f'{c}_baseline' for c in COMPARED])
    table = table.sort_values(KEY_COLUMNS + ['variant']).reset_index(drop=True)

    series = hourly.pivot_table(index=KEY_COLUMNS + ['hour_start'], columns='variant', values='ratio', aggfunc='mean')
    diffs = series.sub(series[baseline], axis=0) if baseline in series.columns else series * float('nan')
    hourly_diff = (
        diffs.reset_index()
        .melt(id_vars=KEY_COLUMNS + ['hour_start'], var_name='variant', value_name='ratio_diff')
        .sort_values(KEY_COLUMNS + ['variant', 'hour_start'])
        .reset_index(drop=True)
    )

    comparison = Comparison(baseline=baseline, table=table, hourly=hourly_diff)
    mean_diff = table.loc[table['variant'] != baseline, 'R_diff'].mean()
    logger.info(
        f"Compared {table['variant'].nunique()} variant(s) against '{baseline}'"
        + (f", mean R difference {mean_diff:+.4f}" if pd.notna(mean_diff) else "")
    )
    if out_dir is not None:
        comparison.write(out_dir)
    return comparison
