import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from src.data.analytic import (
    GaussianBumpInLogOmega, KolmogorovZakharov, RayleighJeans,
    WeightModulated
)
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Form, GridFunction, SpectrumField
from src.models.diagnostics import (
    SeminormDomainError, WeightedNormSpec, energy, entropy, lemma1_admissible,
    lemma1_ratio, lp_norm, lp_norm_nonuniform, make_record, mass,
    scaling_covariance_residual, smoothing_seminorm, stationarity_residual,
    weighted_sup_norm, x_norm
)
from src.models.resonance import build_quadrature


@pytest.fixture
def unit_interval():
    return FrequencyGrid(1.0, math.e, 2001)


def test_mass_energy_entropy_of_unit_spectrum(unit_interval):
    n = SpectrumField(unit_interval, np.ones(unit_interval.node_count),
                      Form.WAVE_ACTION)
    assert mass(n) == pytest.approx((math.e ** 2 - 1.0) / 2.0, rel=1e-6)
    assert energy(n) == pytest.approx((math.e ** 3 - 1.0) / 3.0, rel=1e-6)
    assert entropy(n) == 0.0


def test_mass_of_rayleigh_jeans(unit_interval):
    n = RayleighJeans().to_field(unit_interval)
    assert mass(n) == pytest.approx(math.e - 1.0, rel=1e-6)


def test_entropy_of_constant_e(unit_interval):
    n = SpectrumField(unit_interval, np.full(unit_interval.node_count, math.e),
                      Form.WAVE_ACTION)
    assert entropy(n) == pytest.approx((math.e ** 2 - 1.0) / 2.0, rel=1e-6)


def test_invariants_of_rescaled_fields(unit_interval):
    params = ModelParams(0.0)
    N = SpectrumField(unit_interval, unit_interval.nodes ** 1.5)
    assert mass(N, params) == pytest.approx((math.e ** 2 - 1.0) / 2.0,
                                            rel=1e-6)
    with pytest.raises(ValueError):
        mass(N)


def test_entropy_requires_positive_values(grid):
    values = np.ones(grid.node_count)
    values[5] = 0.0
    with pytest.raises(ValueError, match='node 5'):
        entropy(SpectrumField(grid, values, Form.WAVE_ACTION))


def test_weighted_sup_norm():
    spec = WeightedNormSpec(theta=0.5, gamma_w=1.0)
    grid = FrequencyGrid(0.01, 1.0, 64)
    f = GridFunction(grid, grid.nodes ** 0.5)
    assert weighted_sup_norm(f, spec) == pytest.approx(1.0, rel=1e-14)
    flat = GridFunction(grid, np.ones(grid.node_count))
    assert weighted_sup_norm(flat, WeightedNormSpec(0.0, 0.0)) == 1.0

    wide = FrequencyGrid(0.1, 10.0, 33)
    values = np.random.default_rng(5).normal(size=wide.node_count)
    m = np.where(wide.nodes <= 1.0, wide.nodes ** -0.5, wide.nodes ** 1.0)
    assert weighted_sup_norm(GridFunction(wide, values), spec) == \
        np.max(m * np.abs(values))


def test_lp_norms(unit_interval):
    f = GridFunction(unit_interval, np.full(unit_interval.node_count, 2.0))
    assert lp_norm(f, 2.0) == pytest.approx(2.0 * math.sqrt(math.e - 1.0),
                                            rel=1e-6)
    omegas = np.linspace(0.0, 1.0, 101)
    assert lp_norm_nonuniform(omegas, 3.0 * np.ones(101), 4.0) == \
        pytest.approx(3.0)


def test_seminorm_of_constant_is_zero(grid):
    F = GridFunction(grid, np.full(grid.node_count, 4.0))
    assert smoothing_seminorm(F, 0.0) == 0.0


def test_seminorm_is_homogeneous(grid, bump):
    F = GridFunction(grid, bump(grid.nodes))
    base = smoothing_seminorm(F, 0.25)
    assert base > 0
    assert smoothing_seminorm(F.with_values(4.0 * F.values), 0.25) == \
        pytest.approx(4.0 * base, rel=1e-12)


def test_seminorm_domain(grid):
    F = GridFunction(grid, np.ones(grid.node_count))
    with pytest.raises(SeminormDomainError):
        smoothing_seminorm(F, 1.0)


def test_seminorm_against_adaptive_reference():
    lo, hi = 0.1, 10.0
    grid = FrequencyGrid(lo, hi, 401)
    F = GridFunction(grid, np.log(grid.nodes))
    discrete = smoothing_seminorm(F, 0.0)

    def integrand(w2, w1):
        ratio = w2 / w1
        jump = math.log(ratio) ** 2
        gap = abs(w2 - w1)
        kernel = 1.0 / math.sqrt(w1 * w2)
        if 2.0 / 3.0 <= ratio <= 1.5 and gap > 0:
            kernel += 1.0 / gap
        return jump * kernel

    total = 0.0
    for a, b in ((0.5, 2.0 / 3.0), (2.0 / 3.0, 1.0), (1.0, 1.5), (1.5, 2.0)):
        value, _ = dblquad(integrand, lo, hi,
                           lambda w1, a=a: min(hi, max(lo, a * w1)),
                           lambda w1, b=b: min(hi, max(lo, b * w1)),
                           epsabs=1e-10, epsrel=1e-8)
        total += value
    assert discrete == pytest.approx(math.sqrt(total), rel=0.05)


def test_x_norm_of_constants(grid):
    params = ModelParams(0.0)
    assert x_norm(SpectrumField(grid, np.ones(grid.node_count)), params) == \
        1.0
    assert x_norm(SpectrumField(grid, np.full(grid.node_count, 2.0)),
                  params) == 2.0


def test_record_at_initial_time(grid, bump):
    params = ModelParams(0.0)
    N = SpectrumField(grid, 0.1 + bump(grid.nodes))
    record = make_record(0.0, 0.0, N, params, float(np.min(N.values)))
    assert record.positivity_margin == 1.0
    assert record.min_N == pytest.approx(np.min(N.values))
    assert record.x_norm == pytest.approx(
        record.max_N + record.lp_DN_p0 + record.sup_DN)
    assert set(record.to_dict()) >= {'mass', 'energy', 'entropy',
                                     'seminorm_beta'}


@pytest.mark.parametrize('c1, c2', [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
def test_rayleigh_jeans_stationarity(c1, c2, params, quad):
    residual = stationarity_residual(RayleighJeans(c1, c2), params, quad,
                                     [0.1, 1.0, 10.0])
    assert np.max(residual) <= 1e-8


def test_constant_spectrum_residual_is_exactly_zero(params, quad):
    residual = stationarity_residual(RayleighJeans(0.0, 2.0), params, quad,
                                     [0.1, 1.0, 10.0])
    assert np.all(residual == 0.0)


def test_kz_residual_is_a_fraction(params, quad):
    residual = stationarity_residual(KolmogorovZakharov(params), params,
                                     quad, [0.5, 1.0, 2.0])
    assert np.all(np.isfinite(residual))
    assert np.all((residual >= 0.0) & (residual <= 1.0 + 1e-12))


def test_scaling_covariance(params, quad):
    bump = GaussianBumpInLogOmega(center=1.0, width=0.5)
    assert scaling_covariance_residual(bump, 1.0, 1.0, params, quad) == 0.0
    for lam in (0.5, 2.0):
        assert scaling_covariance_residual(bump, lam, 1.0, params,
                                           quad) <= 1e-8
    with pytest.raises(ValueError):
        scaling_covariance_residual(bump, 0.0, 1.0, params, quad)


def test_lemma1_admissibility():
    assert lemma1_admissible(-0.25, 0.0, 2.0)
    assert not lemma1_admissible(0.25, 0.0, 3.0)
    assert not lemma1_admissible(0.0, -1.5, 3.0)
    assert not lemma1_admissible(0.0, 0.0, 2.0)


def test_lemma1_ratio_is_finite():
    beta = -0.25
    theta, gamma_w = -2 * beta - 0.5, 2 * beta + 2.5
    quad = build_quadrature(ModelParams(beta))
    ratio = lemma1_ratio(WeightModulated(theta, gamma_w, seed=1),
                         WeightedNormSpec(theta, gamma_w), quad,
                         np.geomspace(1e-2, 1e2, 41))
    assert math.isfinite(ratio)
    assert ratio > 0
