"""
Experiment runners behind the command-line sub-commands.

Every runner writes its artifacts below ``<output.directory>/<run_name>``
(run.json first, summary.json last) and returns a RunOutcome carrying the
exit status and the headline values copied into sweep indexes.
"""
import copy
from dataclasses import dataclass, field
from itertools import product
import json
import logging
from pathlib import Path
import random

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from src.data.analytic import build_spectrum
from src.data.data_loader import read_spectrum
from src.data.spectrum import Form, SpectrumField, convert_form
from src.data.var_names import headline_keys, index_file, lemma2_file
from src.definitions import (
    EXIT_BLOW_UP_SUSPECTED, EXIT_OK, EXIT_RUNTIME_ERROR, TENSORBOARD_DIR
)
from src.models.collision import Evaluator, collide_grid, collide_sum_form
from src.models.evaluation import ResultManager
from src.models.evolution import TrajectoryStatus, integrate
from src.models.oracle import (
    fit_slope, lemma2_harness, mc_collision, trivial_resonance_probe
)
from src.models.resonance import ResonanceQuad, build_quadrature
from src.models.verification import run_suites
from .config import ConfigError, RunConfig, parse_config, set_dotted

LOG = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    exit_status: int
    headline: dict = field(default_factory=dict)


def _manager(config: RunConfig) -> ResultManager:
    tensorboard_dir = TENSORBOARD_DIR / config.run_name \
        if config.output.tensorboard else None
    return ResultManager(config.output.directory, config.run_name,
                         tensorboard_dir)


def _quadrature(config: RunConfig) -> ResonanceQuad:
    spec = config.quadrature
    return build_quadrature(config.params, spec.panels_per_decade, spec.order,
                            u_floor=spec.u_floor)


def _finish(manager: ResultManager, config: RunConfig,
            outcome: RunOutcome) -> RunOutcome:
    manager.save_json('summary.json', dict(
        outcome.headline, experiment=config.experiment,
        exit_status=outcome.exit_status))
    manager.finish()
    return outcome


def initial_field(config: RunConfig) -> SpectrumField:
    """N-form initial data on the configured grid."""
    spec = config.initial
    params = config.params
    if spec.path is not None:
        field, beta = read_spectrum(spec.path, spec.extrapolation)
        if beta != params.beta:
            raise ConfigError(
                'initial.path',
                f"file was written for beta={beta}, run has {params.beta}"
            )
        if field.grid != config.grid:
            LOG.info("Resampling initial data onto %s", config.grid)
            field = SpectrumField(config.grid, field(config.grid.nodes),
                                  field.form, spec.extrapolation)
    else:
        try:
            spectrum = spec.analytic(params)
        except (TypeError, ValueError) as error:
            raise ConfigError('initial.spectrum', str(error))
        field = spectrum.to_field(config.grid, Form.WAVE_ACTION,
                                  spec.extrapolation)
    return convert_form(field, params, Form.RESCALED)


# --------------------------------------------------------------------------
# Runners
# --------------------------------------------------------------------------

def run_evolve(config: RunConfig) -> RunOutcome:
    params = config.params
    quad = _quadrature(config)
    field0 = initial_field(config)
    manager = _manager(config)
    manager.save_run_metadata(
        config.raw, params=params.to_dict(), quadrature=quad.describe(),
        extrapolation=field0.extrapolation.value, u_floor=quad.u_floor,
        controller=config.controller.to_dict(), horizon=config.horizon,
    )
    manager.save_spectrum(field0, params, 'initial.csv')

    evaluator = Evaluator.EPSILON if params.epsilon > 0 else Evaluator.SPLIT
    manager.save_collision(
        collide_grid(field0, quad, evaluator, n_jobs=config.output.n_jobs),
        params, 'collision_t0.csv'
    )
    trajectory = integrate(field0, config.horizon, config.controller, quad,
                           n_jobs=config.output.n_jobs,
                           progress=config.output.progress,
                           writer=manager.writer)
    manager.save_trajectory(trajectory, params)
    status = EXIT_OK \
        if trajectory.status is TrajectoryStatus.HORIZON_REACHED \
        else EXIT_BLOW_UP_SUSPECTED
    return _finish(manager, config, RunOutcome(status, trajectory.summary()))


def run_verify(config: RunConfig) -> RunOutcome:
    manager = _manager(config)
    manager.save_run_metadata(config.raw, params=config.params.to_dict(),
                              suites=list(config.suites))
    report = run_suites(config.suites, config.verify)
    passed = sum(check['pass'] for check in report.values())
    for name, check in report.items():
        if not check['pass']:
            LOG.warning("Check %s failed: %g (tolerance %g)", name,
                        check['value'], check['tolerance'])
    manager.save_json('verify.json', {
        'suites': list(config.suites),
        'checks': report,
        'all_passed': passed == len(report),
    })
    status = EXIT_OK if passed == len(report) else EXIT_RUNTIME_ERROR
    return _finish(manager, config, RunOutcome(status, {
        'checks_passed': passed, 'checks_total': len(report)}))


def run_oracle(config: RunConfig) -> RunOutcome:
    """Monte-Carlo estimates next to the sum-form values.

    An estimate passes when it is within three combined errors of the
    quadrature value; the bias term is the change of the estimate when the
    regularization width doubles.
    """
    spec = config.oracle
    params = config.params
    try:
        spectrum = build_spectrum(spec.spectrum, params)
    except (TypeError, ValueError) as error:
        raise ConfigError('oracle.spectrum', str(error))
    quad = _quadrature(config)
    manager = _manager(config)
    manager.save_run_metadata(config.raw, params=params.to_dict(),
                              quadrature=quad.describe())

    fast = collide_sum_form(spectrum, np.asarray(spec.omegas), quad)
    entries = []
    for omega, value in tqdm(list(zip(spec.omegas, fast)), unit='omega',
                             disable=not config.output.progress):
        estimate = mc_collision(spectrum, omega, params, spec.delta,
                                spec.samples, config.seed,
                                n_jobs=config.output.n_jobs)
        coarse = mc_collision(spectrum, omega, params, 2.0 * spec.delta,
                              spec.samples, config.seed,
                              n_jobs=config.output.n_jobs)
        bias = abs(coarse.mean - estimate.mean)
        entry = estimate.to_dict()
        entry.update(
            sum_form=float(value), bias=bias,
            passed=bool(abs(estimate.mean - value)
                        <= 3.0 * (estimate.std_error + bias)),
        )
        entries.append(entry)
    report = {'spectrum': spectrum.describe(), 'estimates': entries}
    if spec.probe_deltas:
        probe = trivial_resonance_probe(
            spectrum, spec.omegas[0], params, spec.probe_deltas,
            spec.samples, config.seed, n_jobs=config.output.n_jobs)
        report['trivial_resonance'] = probe.to_dict()
    manager.save_json('oracle.json', report)

    status = EXIT_OK if all(e['passed'] for e in entries) \
        else EXIT_RUNTIME_ERROR
    return _finish(manager, config, RunOutcome(status, {
        'mean': entries[0]['mean'], 'std_error': entries[0]['std_error']}))


def run_lemma2(config: RunConfig) -> RunOutcome:
    spec = config.lemma2
    manager = _manager(config)
    manager.save_run_metadata(config.raw, params=config.params.to_dict())
    result = lemma2_harness(spec.p, spec.eps, config.params, spec.order,
                            spec.max_u_nodes, n_jobs=config.output.n_jobs,
                            progress=config.output.progress)
    manager.save_table('lemma2.csv', result.rows, lemma2_file.features)
    manager.save_json('lemma2.json', result.to_dict())
    return _finish(manager, config, RunOutcome(EXIT_OK, {
        'slope': result.slope,
        'collision_norm': result.rows[-1]['collision_norm'],
        'eps': result.rows[-1]['eps'],
    }))


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

class SweepIterator:
    """Iterates over the children of a sweep.

    Yields (run_id, overrides, RunConfig) triples. Children write below the
    parent's run directory; with ``sweep.reseed`` each child draws its own
    seed from a generator seeded by the parent seed.
    """

    def __init__(self, config: RunConfig, parent_dir: Path):
        self.config = config
        self.parent_dir = parent_dir

    def combinations(self):
        overrides = self.config.sweep.overrides
        values = overrides.values()
        rows = product(*values) if self.config.sweep.mode == 'grid' \
            else zip(*values)
        return [dict(zip(overrides, row)) for row in rows]

    def __len__(self):
        return len(self.combinations())

    def __iter__(self):
        spec = self.config.sweep
        rnd = random.Random(x=self.config.seed)
        for i, overrides in enumerate(self.combinations()):
            run_id = f"run_{i:03d}"
            raw = copy.deepcopy(self.config.raw)
            raw.pop('sweep', None)
            raw['experiment'] = spec.experiment
            if spec.reseed:
                raw['seed'] = rnd.randint(0, 999999999)
            set_dotted(raw, 'output.directory', str(self.parent_dir))
            set_dotted(raw, 'output.run_name', run_id)
            set_dotted(raw, 'output.progress', False)
            for key, value in overrides.items():
                set_dotted(raw, key, value)
            yield run_id, overrides, parse_config(raw, self.config.base_dir)


def _run_child(run_id: str, child: RunConfig) -> RunOutcome:
    try:
        return run_experiment(child)
    except Exception as error:
        LOG.exception("Sweep child %s failed", run_id)
        return RunOutcome(EXIT_RUNTIME_ERROR, {'error': str(error)})


def run_sweep(config: RunConfig) -> RunOutcome:
    """Run every child and write index.csv (plus summary.json).

    Children are validated before any of them runs, so one bad override
    fails the whole sweep with a config error.
    """
    spec = config.sweep
    parent_dir = config.output.directory / config.run_name
    children = list(SweepIterator(config, parent_dir))
    manager = _manager(config)
    manager.save_run_metadata(config.raw, children=len(children))

    LOG.info("Sweeping %d %s runs", len(children), spec.experiment)
    if spec.n_jobs == 1:
        outcomes = [
            _run_child(run_id, child) for run_id, _, child
            in tqdm(children, unit='run', disable=not config.output.progress)
        ]
    else:
        outcomes = Parallel(n_jobs=spec.n_jobs)(
            delayed(_run_child)(run_id, child)
            for run_id, _, child in children
        )

    rows = []
    for (run_id, overrides, _), outcome in zip(children, outcomes):
        row = {
            'run_id': run_id,
            'overrides': json.dumps(overrides, sort_keys=True),
            'exit_status': outcome.exit_status,
            'error': outcome.headline.get('error', ''),
        }
        row.update({key: outcome.headline.get(key)
                    for key in headline_keys})
        rows.append(row)
    manager.save_table('index.csv', rows,
                       index_file.features + headline_keys)

    headline = {'children': len(children),
                'failed': sum(o.exit_status != EXIT_OK for o in outcomes)}
    if spec.experiment == 'lemma2' \
            and all(len(child.lemma2.eps) == 1 for _, _, child in children):
        done = [o.headline for o in outcomes if o.exit_status == EXIT_OK]
        headline['slope'] = fit_slope([h['eps'] for h in done],
                                      [h['collision_norm'] for h in done])
        headline['expected_slope'] = 1.0 - 3.0 / children[0][2].lemma2.p
    status = EXIT_OK if headline['failed'] == 0 else EXIT_RUNTIME_ERROR
    return _finish(manager, config, RunOutcome(status, headline))


RUNNERS = {
    'evolve': run_evolve,
    'verify': run_verify,
    'oracle': run_oracle,
    'lemma2': run_lemma2,
    'sweep': run_sweep,
}


def run_experiment(config: RunConfig) -> RunOutcome:
    return RUNNERS[config.experiment](config)
