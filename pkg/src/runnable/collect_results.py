import json
from pathlib import Path
from typing import Iterable
import warnings

import click
import pandas as pd

from src.definitions import RESULTS_DIR

experiments = (
    'evolve',
    'verify',
    'oracle',
    'lemma2',
    'sweep',
)


def load_results(run_dir: Path) -> dict:
    """summary.json of a run merged with the parameters from its run.json."""
    with open(run_dir / 'summary.json') as file:
        row = json.load(file)
    with open(run_dir / 'run.json') as file:
        metadata = json.load(file)
    config = metadata['config']
    row.update({
        'run_dir': str(run_dir),
        'seed': config.get('seed', 0),
        'beta': config['params']['beta'],
        'epsilon': config['params'].get('epsilon', 0.0),
        'config_hash': metadata['config_hash'],
    })
    if 'grid' in config:
        row['node_count'] = config['grid'].get('node_count')
    return row


def find_runs(base_dir: Path, experiment: str) -> Iterable[Path]:
    """Run directories below ``base_dir`` (sweep children included)."""
    for summary in sorted(base_dir.glob('**/summary.json')):
        run_dir = summary.parent
        if not (run_dir / 'run.json').exists():
            warnings.warn(f"{run_dir} has no run.json")
            continue
        with open(summary) as file:
            if json.load(file).get('experiment') == experiment:
                yield run_dir


def collect_results(base_dir: Path, experiment: str) -> pd.DataFrame:
    rows = [load_results(run_dir)
            for run_dir in find_runs(base_dir, experiment)]
    if not rows:
        return pd.DataFrame()
    df = pd.DataFrame(rows).set_index('run_dir')
    df.sort_index(inplace=True)
    return df


@click.command()
@click.option('-d', '--directory',
              default=str(RESULTS_DIR),
              help='Directory containing run directories.')
@click.option('-k', '--kind',
              required=True,
              type=click.Choice(experiments),
              help='Which experiment to aggregate.')
@click.option('-o', '--output', default=None,
              help='Target CSV (default results_<kind>.csv).')
def main(directory, kind, output):
    d = collect_results(Path(directory), kind)
    print(f"Found {d.shape[0]} {kind} runs")
    if d.empty:
        return
    if 'beta' in d.columns:
        print(d.groupby('beta').size())
    out_file = output or f'results_{kind}.csv'
    print(f"Writing {out_file}")
    d.to_csv(out_file, float_format='%.17g')


if __name__ == '__main__':
    main()
