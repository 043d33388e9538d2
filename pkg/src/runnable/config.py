"""
Run configurations.

A run configuration is a YAML document with the top-level sections
experiment, seed, params, grid, initial, controller, quadrature, output and
one section per experiment (verify, oracle, lemma2, sweep). Nested mappings
are addressed by dotted keys, e.g. ``params.beta``.
"""
import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from src.data.analytic import AnalyticSpectrum, build_spectrum
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Extrapolation
from src.definitions import RESULTS_DIR, U_FLOOR
from src.models.evolution import StepController
from src.models.oracle import MIN_SAMPLES
from src.models.verification import SUITES, VerifySettings

EXPERIMENTS = ('evolve', 'verify', 'oracle', 'lemma2', 'sweep')

SECTIONS = ('experiment', 'seed', 'params', 'grid', 'initial', 'controller',
            'quadrature', 'output') + EXPERIMENTS[1:]

DEFAULT_SUITES = ('resonance', 'stationarity', 'cross_form', 'scaling')


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the dotted field."""

    def __init__(self, name: str, message: str):
        super(ConfigError, self).__init__(f"{name}: {message}")
        self.name = name


# --------------------------------------------------------------------------
# Field access
# --------------------------------------------------------------------------

def _section(raw: dict, name: str, required: bool = False) -> dict:
    value = raw.get(name)
    if value is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a mapping")
    return value


def _get(section: dict, prefix: str, key: str, kind=float,
         default: Any = None, required: bool = False):
    name = f"{prefix}.{key}"
    if key not in section or section[key] is None:
        if required:
            raise ConfigError(name, "missing value")
        return default
    value = section[key]
    try:
        if kind is int and (isinstance(value, bool)
                            or int(value) != float(value)):
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind.__name__}, got {value!r}")


def _get_list(section: dict, prefix: str, key: str, kind=float,
              default: Tuple = None) -> Optional[Tuple]:
    name = f"{prefix}.{key}"
    if key not in section or section[key] is None:
        return default
    value = section[key]
    if not isinstance(value, (list, tuple)):
        value = [value]
    try:
        return tuple(kind(item) for item in value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a list of {kind.__name__}")


def set_dotted(raw: dict, dotted: str, value) -> None:
    """Set raw['a']['b'] = value for dotted key 'a.b'."""
    keys = dotted.split('.')
    target = raw
    for key in keys[:-1]:
        nested = target.setdefault(key, {})
        if not isinstance(nested, dict):
            raise ConfigError(dotted, f"{key!r} is not a section")
        target = nested
    target[keys[-1]] = value


# --------------------------------------------------------------------------
# Sections
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialSpec:
    """Analytic initial data (an n-form spectrum mapping) or a CSV path."""
    spectrum: Optional[dict] = None
    path: Optional[Path] = None
    extrapolation: Extrapolation = Extrapolation.CONSTANT

    def analytic(self, params: ModelParams) -> AnalyticSpectrum:
        return build_spectrum(self.spectrum, params)


@dataclass(frozen=True)
class QuadratureSpec:
    panels_per_decade: int = 4
    order: int = 8
    u_floor: float = U_FLOOR

    def to_dict(self) -> dict:
        return {'panels_per_decade': self.panels_per_decade,
                'order': self.order, 'u_floor': self.u_floor}


@dataclass(frozen=True)
class OutputSpec:
    directory: Path = RESULTS_DIR
    run_name: Optional[str] = None
    tensorboard: bool = False
    progress: bool = True
    n_jobs: Optional[int] = None


@dataclass(frozen=True)
class OracleSpec:
    spectrum: dict
    omegas: Tuple[float, ...] = (1.0,)
    delta: float = 1e-3
    samples: int = 1_000_000
    probe_deltas: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Lemma2Spec:
    p: float = 2.0
    eps: Tuple[float, ...] = (0.1, 0.05, 0.025)
    order: int = 4
    max_u_nodes: int = 400_000


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    overrides: Dict[str, List[Any]]
    mode: str = 'grid'
    n_jobs: int = 1
    reseed: bool = False


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    seed: int
    params: ModelParams
    quadrature: QuadratureSpec
    output: OutputSpec
    raw: dict = field(repr=False, compare=False)
    base_dir: Path = Path('.')
    grid: Optional[FrequencyGrid] = None
    initial: Optional[InitialSpec] = None
    controller: Optional[StepController] = None
    horizon: Optional[float] = None
    suites: Tuple[str, ...] = ()
    verify: Optional[VerifySettings] = None
    oracle: Optional[OracleSpec] = None
    lemma2: Optional[Lemma2Spec] = None
    sweep: Optional[SweepSpec] = None

    @property
    def run_name(self) -> str:
        if self.output.run_name:
            return self.output.run_name
        return f"{self.experiment}_beta{self.params.beta:g}_seed{self.seed}"


def _params(raw: dict) -> ModelParams:
    section = _section(raw, 'params', required=True)
    beta = _get(section, 'params', 'beta', required=True)
    try:
        return ModelParams(
            beta=beta,
            p0=_get(section, 'params', 'p0', int),
            epsilon=_get(section, 'params', 'epsilon', default=0.0),
        )
    except ConfigError:
        raise
    except ValueError as error:
        raise ConfigError('params', str(error))


def _grid(raw: dict) -> FrequencyGrid:
    section = _section(raw, 'grid', required=True)
    try:
        return FrequencyGrid(
            _get(section, 'grid', 'omega_min', required=True),
            _get(section, 'grid', 'omega_max', required=True),
            _get(section, 'grid', 'node_count', int, required=True),
        )
    except ConfigError:
        raise
    except ValueError as error:
        raise ConfigError('grid', str(error))


def _initial(raw: dict, base_dir: Path) -> InitialSpec:
    section = _section(raw, 'initial', required=True)
    try:
        extrapolation = Extrapolation(section.get('extrapolation',
                                                  'constant'))
    except ValueError:
        raise ConfigError('initial.extrapolation',
                          f"unknown policy {section['extrapolation']!r}")
    if 'path' in section:
        path = Path(section['path'])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError('initial.path', f"no such file {path}")
        return InitialSpec(path=path, extrapolation=extrapolation)
    spectrum = section.get('spectrum')
    if not isinstance(spectrum, dict) or 'kind' not in spectrum:
        raise ConfigError('initial.spectrum',
                          "need a mapping with a 'kind' key or initial.path")
    return InitialSpec(spectrum=dict(spectrum), extrapolation=extrapolation)


def _controller(raw: dict) -> Tuple[StepController, float]:
    section = dict(_section(raw, 'controller', required=True))
    horizon = _get(section, 'controller', 'horizon', required=True)
    if not horizon > 0:
        raise ConfigError('controller.horizon', "must be > 0")
    keys = ('dt_init', 'safety', 'dt_min', 'dt_max', 'positivity_floor',
            'tol_rk', 'snapshot_every')
    unknown = set(section) - set(keys) - {'horizon'}
    if unknown:
        raise ConfigError(f"controller.{sorted(unknown)[0]}", "unknown key")
    values = {key: _get(section, 'controller', key) for key in keys
              if section.get(key) is not None}
    try:
        return StepController(**values), horizon
    except ValueError as error:
        raise ConfigError('controller', str(error))


def _quadrature(raw: dict) -> QuadratureSpec:
    section = _section(raw, 'quadrature')
    spec = QuadratureSpec(
        panels_per_decade=_get(section, 'quadrature', 'panels_per_decade',
                               int, default=4),
        order=_get(section, 'quadrature', 'order', int, default=8),
        u_floor=_get(section, 'quadrature', 'u_floor', default=U_FLOOR),
    )
    if spec.panels_per_decade < 2:
        raise ConfigError('quadrature.panels_per_decade', "must be >= 2")
    if not 4 <= spec.order <= 32:
        raise ConfigError('quadrature.order', "must lie in [4, 32]")
    if not 0.0 < spec.u_floor < 1.0:
        raise ConfigError('quadrature.u_floor', "must lie in (0, 1)")
    return spec


def _output(raw: dict, base_dir: Path) -> OutputSpec:
    section = _section(raw, 'output')
    directory = Path(section.get('directory', RESULTS_DIR))
    if not directory.is_absolute():
        directory = base_dir / directory
    tensorboard = _get(section, 'output', 'tensorboard', bool, default=False)
    return OutputSpec(
        directory=directory,
        run_name=section.get('run_name'),
        tensorboard=tensorboard,
        progress=_get(section, 'output', 'progress', bool, default=True),
        n_jobs=_get(section, 'output', 'n_jobs', int),
    )


def _verify(raw: dict, seed: int, quadrature: QuadratureSpec,
            n_jobs: int) -> Tuple[Tuple[str, ...], VerifySettings]:
    section = _section(raw, 'verify')
    suites = _get_list(section, 'verify', 'suites', str, DEFAULT_SUITES)
    unknown = [name for name in suites if name not in SUITES]
    if unknown:
        raise ConfigError('verify.suites', f"unknown check {unknown[0]!r}")
    if not suites:
        raise ConfigError('verify.suites', "empty suite list")
    defaults = VerifySettings()
    samples = _get(section, 'verify', 'samples', int, defaults.samples)
    if samples < MIN_SAMPLES:
        raise ConfigError('verify.samples', f"must be >= {MIN_SAMPLES}")
    settings = VerifySettings(
        betas=_get_list(section, 'verify', 'betas', default=defaults.betas),
        omegas=_get_list(section, 'verify', 'omegas',
                         default=defaults.omegas),
        seed=seed,
        panels_per_decade=quadrature.panels_per_decade,
        order=quadrature.order,
        samples=samples,
        delta=_get(section, 'verify', 'delta', default=defaults.delta),
        bumps=_get(section, 'verify', 'bumps', int, defaults.bumps),
        probe_deltas=_get_list(section, 'verify', 'probe_deltas',
                               default=defaults.probe_deltas),
        lemma1_betas=_get_list(section, 'verify', 'lemma1_betas',
                               default=defaults.lemma1_betas),
        lemma1_fields=_get(section, 'verify', 'lemma1_fields', int,
                           defaults.lemma1_fields),
        n_jobs=n_jobs,
    )
    return suites, settings


def _oracle(raw: dict) -> OracleSpec:
    section = _section(raw, 'oracle', required=True)
    spectrum = section.get('spectrum')
    if not isinstance(spectrum, dict) or 'kind' not in spectrum:
        raise ConfigError('oracle.spectrum',
                          "need a mapping with a 'kind' key")
    spec = OracleSpec(
        spectrum=dict(spectrum),
        omegas=_get_list(section, 'oracle', 'omegas', default=(1.0,)),
        delta=_get(section, 'oracle', 'delta', default=1e-3),
        samples=_get(section, 'oracle', 'samples', int, 1_000_000),
        probe_deltas=_get_list(section, 'oracle', 'probe_deltas',
                               default=()),
    )
    if spec.samples < MIN_SAMPLES:
        raise ConfigError('oracle.samples', f"must be >= {MIN_SAMPLES}")
    if not spec.delta > 0:
        raise ConfigError('oracle.delta', "must be > 0")
    if any(omega <= 0 for omega in spec.omegas):
        raise ConfigError('oracle.omegas', "frequencies must be > 0")
    return spec


def _lemma2(raw: dict) -> Lemma2Spec:
    section = _section(raw, 'lemma2')
    spec = Lemma2Spec(
        p=_get(section, 'lemma2', 'p', default=2.0),
        eps=_get_list(section, 'lemma2', 'eps',
                      default=(0.1, 0.05, 0.025)),
        order=_get(section, 'lemma2', 'order', int, 4),
        max_u_nodes=_get(section, 'lemma2', 'max_u_nodes', int, 400_000),
    )
    if not 1.0 <= spec.p < 3.0:
        raise ConfigError('lemma2.p', "must lie in [1, 3)")
    if not spec.eps or any(not 0 < eps < 0.25 for eps in spec.eps):
        raise ConfigError('lemma2.eps', "need values in (0, 1/4)")
    return spec


def _sweep(raw: dict) -> SweepSpec:
    section = _section(raw, 'sweep', required=True)
    experiment = section.get('experiment')
    if experiment not in EXPERIMENTS[:-1]:
        raise ConfigError('sweep.experiment',
                          f"must be one of {EXPERIMENTS[:-1]}")
    overrides = section.get('overrides')
    if not isinstance(overrides, dict) or not overrides:
        raise ConfigError('sweep.overrides', "empty sweep")
    for key, values in overrides.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f'sweep.overrides.{key}', "empty value list")
    mode = section.get('mode', 'grid')
    if mode not in ('grid', 'zip'):
        raise ConfigError('sweep.mode', "must be 'grid' or 'zip'")
    if mode == 'zip' and len({len(v) for v in overrides.values()}) != 1:
        raise ConfigError('sweep.overrides',
                          "zip mode needs value lists of equal length")
    return SweepSpec(
        experiment=experiment,
        overrides={key: list(values) for key, values in overrides.items()},
        mode=mode,
        n_jobs=_get(section, 'sweep', 'n_jobs', int, 1),
        reseed=_get(section, 'sweep', 'reseed', bool, False),
    )


# --------------------------------------------------------------------------
# Entry points
# --------------------------------------------------------------------------

def parse_config(raw: dict, base_dir: Path = Path('.')) -> RunConfig:
    """Validate a raw mapping into a RunConfig.

    Raises:
        ConfigError: The first missing or invalid field.
    """
    if not isinstance(raw, dict):
        raise ConfigError('config', "top level must be a mapping")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    experiment = raw.get('experiment')
    if experiment not in EXPERIMENTS:
        raise ConfigError('experiment', f"must be one of {EXPERIMENTS}")
    seed = raw.get('seed', 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError('seed', f"expected an integer >= 0, got {seed!r}")

    params = _params(raw)
    quadrature = _quadrature(raw)
    output = _output(raw, base_dir)
    parsed = dict(experiment=experiment, seed=seed, params=params,
                  quadrature=quadrature, output=output,
                  raw=copy.deepcopy(raw), base_dir=Path(base_dir))

    if experiment == 'evolve':
        parsed['grid'] = _grid(raw)
        parsed['initial'] = _initial(raw, base_dir)
        parsed['controller'], parsed['horizon'] = _controller(raw)
    elif experiment == 'verify':
        parsed['suites'], parsed['verify'] = _verify(
            raw, seed, quadrature, output.n_jobs)
    elif experiment == 'oracle':
        parsed['oracle'] = _oracle(raw)
    elif experiment == 'lemma2':
        parsed['lemma2'] = _lemma2(raw)
    else:
        parsed['sweep'] = _sweep(raw)
    return RunConfig(**parsed)


def load_config(path: Path,
                experiment: str = None,
                out: Path = None,
                seed: int = None) -> RunConfig:
    """Read a YAML run configuration and apply command-line overrides."""
    path = Path(path)
    try:
        with open(path) as file:
            raw = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError('config', f"no such file {path}")
    except yaml.YAMLError as error:
        raise ConfigError('config', f"invalid YAML: {error}")
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError('config', "top level must be a mapping")
    if experiment is not None:
        raw['experiment'] = experiment
    if out is not None:
        set_dotted(raw, 'output.directory', str(Path(out).resolve()))
    if seed is not None:
        raw['seed'] = seed
    return parse_config(raw, base_dir=path.resolve().parent)
