"""
Check suites bundled by the verify experiment.

Each suite takes a VerifySettings and returns a list of CheckResult items;
a check passes when its value is within tolerance (or, for lower bounds,
at least the tolerance).
"""
from dataclasses import dataclass
import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from src.data.analytic import (
    GaussianBumpInLogOmega, RandomBumps, RayleighJeans, Rescaled,
    WeightModulated
)
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Form, SpectrumField
from .collision import (
    collide_split, collide_sum_form, collide_symmetric, constant_state_rate
)
from .diagnostics import (
    WeightedNormSpec, lemma1_admissible, lemma1_ratio,
    scaling_covariance_residual, stationarity_residual
)
from .evolution import StepController, integrate
from .oracle import mc_collision, trivial_resonance_probe
from .resonance import (
    FAMILIES, build_quadrature, family_nodes, v_values, weight_W
)

LOG = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, value: float, tolerance: float):
        value = float(value)
        return cls(name, value, tolerance,
                   bool(math.isfinite(value) and value <= tolerance))

    @classmethod
    def at_least(cls, name: str, value: float, tolerance: float):
        value = float(value)
        return cls(name, value, tolerance,
                   bool(math.isfinite(value) and value >= tolerance))

    def to_dict(self) -> dict:
        return {'value': self.value, 'tolerance': self.tolerance,
                'pass': self.passed}


@dataclass(frozen=True)
class VerifySettings:
    betas: Tuple[float, ...] = (-0.5, 0.0, 0.5)
    omegas: Tuple[float, ...] = (0.1, 1.0, 10.0)
    seed: int = 42
    panels_per_decade: int = 4
    order: int = 8
    samples: int = 1_000_000
    delta: float = 1e-3
    bumps: int = 5
    probe_deltas: Tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    lemma1_betas: Tuple[float, ...] = (-0.5, -0.25, 0.0)
    lemma1_fields: int = 10
    n_jobs: int = None

    def quad(self, beta: float):
        return build_quadrature(ModelParams(beta), self.panels_per_decade,
                                self.order)


def _bump():
    return GaussianBumpInLogOmega(center=1.0, width=0.5)


# --------------------------------------------------------------------------
# Suites
# --------------------------------------------------------------------------

def resonance_suite(settings: VerifySettings) -> List[CheckResult]:
    rng = np.random.Generator(np.random.Philox(settings.seed))
    u = rng.random(10_000)
    v = v_values(u)
    checks = [
        CheckResult.at_most('linear_resonance',
                            np.max(np.abs(v.v1 + v.v3 - v.v2 - v.v4)), 1e-14),
        CheckResult.at_most(
            'quadratic_resonance',
            np.max(np.abs(v.v1 ** 2 + v.v3 ** 2 + v.v4 ** 2 - v.v2 ** 2)),
            1e-14),
    ]
    # Away from u = 0 families 2 and 4 stay O(1/u); compare relatively.
    u_open = np.clip(u, 1e-3, 1.0)
    relations = {
        1: lambda a, b, c: a * a + b * b + c * c - 1.0,
        2: lambda a, b, c: c * c - a * a - b * b - 1.0,
        3: lambda a, b, c: a * a - b * b - c * c - 1.0,
        4: lambda a, b, c: a * a - b * b - c * c - 1.0,
    }
    for family in FAMILIES:
        a, b, c = family_nodes(family, u_open)
        scale = 1.0 + a * a + b * b + c * c
        checks.append(CheckResult.at_most(
            f'family_{family}_linear',
            np.max(np.abs(a + b - c - 1.0) / (1.0 + a + b + c)), 1e-14))
        checks.append(CheckResult.at_most(
            f'family_{family}_quadratic',
            np.max(np.abs(relations[family](a, b, c)) / scale), 1e-14))
    u_pos = u_open
    for beta in settings.betas:
        scaled = weight_W(u_pos, beta) * u_pos ** (2 * beta + 1)
        checks.append(CheckResult.at_most(
            f'weight_envelope_beta={beta:g}',
            max(np.max(scaled) / 6.0, 0.125 / np.min(scaled)), 1.0))
    return checks


def stationarity_suite(settings: VerifySettings) -> List[CheckResult]:
    checks = []
    for beta in settings.betas:
        params = ModelParams(beta)
        quad = settings.quad(beta)
        for c1, c2 in ((1.0, 0.0), (1.0, 1.0), (0.0, 1.0)):
            residual = stationarity_residual(
                RayleighJeans(c1, c2), params, quad, settings.omegas)
            checks.append(CheckResult.at_most(
                f'rayleigh_jeans_c1={c1:g}_c2={c2:g}_beta={beta:g}',
                np.max(residual), 1e-8))
    return checks


def cross_form_suite(settings: VerifySettings) -> List[CheckResult]:
    """Sum form (times w^gamma), symmetric and split forms on bump data."""
    checks = []
    bump = _bump()
    omegas = np.asarray(settings.omegas, dtype=float)
    for beta in settings.betas:
        params = ModelParams(beta)
        quad = settings.quad(beta)
        rescaled = Rescaled(bump, params)
        reference = omegas ** params.gamma_scale \
            * collide_sum_form(bump, omegas, quad)
        size = np.maximum(np.abs(reference), np.finfo(float).tiny)
        for name, values in (
                ('symmetric', collide_symmetric(rescaled, omegas, quad)),
                ('split', collide_split(rescaled, omegas, quad))):
            checks.append(CheckResult.at_most(
                f'{name}_vs_sum_beta={beta:g}',
                np.max(np.abs(values - reference) / size), 1e-6))
    return checks


def scaling_suite(settings: VerifySettings) -> List[CheckResult]:
    checks = []
    bump = _bump()
    for beta in settings.betas:
        params = ModelParams(beta)
        quad = settings.quad(beta)
        for lam in (0.5, 2.0):
            checks.append(CheckResult.at_most(
                f'scaling_lambda={lam:g}_beta={beta:g}',
                scaling_covariance_residual(bump, lam, 1.0, params, quad),
                1e-8))
    return checks


def oracle_suite(settings: VerifySettings) -> List[CheckResult]:
    """Monte-Carlo against the sum form on seeded random bumps at beta=0."""
    params = ModelParams(0.0)
    quad = settings.quad(0.0)
    checks = []
    for i in range(settings.bumps):
        spectrum = RandomBumps(seed=settings.seed + i)
        fast = float(collide_sum_form(spectrum, 1.0, quad)[0])
        estimate = mc_collision(spectrum, 1.0, params, settings.delta,
                                settings.samples, settings.seed + i,
                                n_jobs=settings.n_jobs)
        coarse = mc_collision(spectrum, 1.0, params, 2.0 * settings.delta,
                              settings.samples, settings.seed + i,
                              n_jobs=settings.n_jobs)
        bias = abs(coarse.mean - estimate.mean)
        allowed = 3.0 * (estimate.std_error + bias)
        checks.append(CheckResult.at_most(
            f'random_bump_{i}', abs(estimate.mean - fast), allowed))
        checks.append(CheckResult.at_most(
            f'random_bump_{i}_std_error', estimate.std_error,
            max(abs(fast), 1e-12)))
    return checks


def trivial_resonance_suite(settings: VerifySettings) -> List[CheckResult]:
    params = ModelParams(0.0)
    bump = _bump()
    samples = max(settings.samples // 4, 10_000)
    probe = trivial_resonance_probe(bump, 1.0, params, settings.probe_deltas,
                                    samples, settings.seed,
                                    n_jobs=settings.n_jobs)
    empty = trivial_resonance_probe(bump, 1.0, params,
                                    settings.probe_deltas[:1], 10_000,
                                    settings.seed, family=(-1, -1, -1),
                                    n_jobs=settings.n_jobs)
    return [
        CheckResult.at_least('trivial_family_slope', probe.slope, 0.4),
        CheckResult.at_most('empty_family', abs(empty.estimates[0].mean),
                            0.0),
    ]


def lemma1_suite(settings: VerifySettings) -> List[CheckResult]:
    """Boundedness of C+ in the weighted sup norm over random fields.

    Two independent sets of fields must give maximal ratios within 20%.
    """
    omegas = np.geomspace(1e-3, 1e3, 121)
    checks = []
    for beta in settings.lemma1_betas:
        theta, gamma_w = -2 * beta - 0.5, 2 * beta + 2.5
        assert lemma1_admissible(beta, theta, gamma_w)
        spec = WeightedNormSpec(theta, gamma_w)
        quad = settings.quad(beta)
        maxima = []
        for offset in (0, settings.lemma1_fields):
            ratios = [
                lemma1_ratio(WeightModulated(theta, gamma_w, seed), spec,
                             quad, omegas)
                for seed in range(settings.seed + offset,
                                  settings.seed + offset
                                  + settings.lemma1_fields)
            ]
            maxima.append(max(ratios))
        spread = abs(maxima[0] - maxima[1]) / max(maxima)
        checks.append(CheckResult.at_most(
            f'lemma1_ratio_beta={beta:g}', maxima[0], math.inf))
        checks.append(CheckResult.at_most(
            f'lemma1_stability_beta={beta:g}', spread, 0.2))
    return checks


def constant_state_suite(settings: VerifySettings) -> List[CheckResult]:
    """Constant N: K vanishes at gamma in {0, 1}; otherwise N' = K N^3."""
    checks = []
    for beta in (-0.75, -0.25):
        checks.append(CheckResult.at_most(
            f'constant_state_rate_beta={beta:g}',
            abs(constant_state_rate(settings.quad(beta))), 1e-12))

    quad = settings.quad(0.0)
    rate = constant_state_rate(quad)
    grid = FrequencyGrid(0.1, 10.0, 16)
    start = 1.0
    # Stay well before the blow-up time 1 / (2 K) when K > 0.
    horizon = min(1.0, 0.2 / abs(rate)) if rate != 0 else 1.0
    trajectory = integrate(
        SpectrumField(grid, np.full(grid.node_count, start), Form.RESCALED),
        horizon, StepController(dt_init=1e-2, tol_rk=1e-10), quad,
        n_jobs=settings.n_jobs
    )
    t = trajectory.final_time
    exact = start / math.sqrt(1.0 - 2.0 * rate * start ** 2 * t)
    checks.append(CheckResult.at_most(
        'constant_state_evolution',
        np.max(np.abs(trajectory.final.values - exact)) / exact, 1e-8))
    return checks


SUITES: Dict[str, Callable[[VerifySettings], List[CheckResult]]] = {
    'resonance': resonance_suite,
    'stationarity': stationarity_suite,
    'cross_form': cross_form_suite,
    'scaling': scaling_suite,
    'oracle': oracle_suite,
    'trivial_resonance': trivial_resonance_suite,
    'lemma1': lemma1_suite,
    'constant_state': constant_state_suite,
}


class SuiteIterator:
    """Iterates over the requested suites, yielding (name, checks)."""

    def __init__(self, names, settings: VerifySettings):
        unknown = [name for name in names if name not in SUITES]
        if unknown:
            raise KeyError(f"unknown check suite(s) {unknown}")
        self.names = list(names)
        self.settings = settings

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        for name in self.names:
            LOG.info("Running suite %s", name)
            yield name, SUITES[name](self.settings)


def run_suites(names, settings: VerifySettings = None) -> dict:
    """Report {check_name: {value, tolerance, pass}} over the named suites."""
    settings = settings or VerifySettings()
    report = {}
    for suite, checks in SuiteIterator(names, settings):
        for check in checks:
            report[f'{suite}.{check.name}'] = check.to_dict()
    return report
