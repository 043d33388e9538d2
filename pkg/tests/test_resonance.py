import math

import mpmath
import numpy as np
import pytest

from src.data.params import ModelParams
from src.data.spectrum import DomainError
from src.models.resonance import (
    FAMILIES, build_quadrature, build_uniform_quadrature, family_kernel,
    family_nodes, v_values, weight_W
)


@pytest.mark.parametrize('u, expected', [
    (0.0, (1.0, 1.0, 0.0, 0.0)),
    (1.0, (2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0)),
    (0.5, (6.0 / 7.0, 1.0, 3.0 / 7.0, 2.0 / 7.0)),
])
def test_v_values(u, expected):
    assert tuple(float(v) for v in v_values(u)) == \
        pytest.approx(expected, abs=1e-15)


def test_resonance_identities_hold_to_rounding():
    u = np.random.default_rng(1).random(10_000)
    v1, v2, v3, v4 = v_values(u)
    assert np.max(np.abs(v1 + v3 - v2 - v4)) <= 1e-14
    assert np.max(np.abs(v1 ** 2 + v3 ** 2 + v4 ** 2 - v2 ** 2)) <= 1e-14


@pytest.mark.parametrize('u', [-0.1, 1.5, math.nan])
def test_v_values_domain(u):
    with pytest.raises(DomainError):
        v_values(u)


def test_weight_examples():
    assert float(weight_W(1.0, 0.0)) == pytest.approx(math.sqrt(3.0) / 2.0,
                                                      rel=1e-14)
    assert float(weight_W(1.0, -0.5)) == pytest.approx(1.0 / 3.0, rel=1e-14)
    with pytest.raises(DomainError):
        weight_W(0.0, 0.0)


def test_weight_against_high_precision():
    mpmath.mp.dps = 40
    u, beta = mpmath.mpf('0.1'), mpmath.mpf('0.25')
    d = 1 + u + u * u
    product = ((1 + u) / d) * (u * (1 + u) / d) * (u / d)
    reference = product ** (-beta - mpmath.mpf('0.5')) / d
    assert float(weight_W(0.1, 0.25)) == \
        pytest.approx(float(reference), rel=1e-12)


def test_family_node_examples():
    assert tuple(float(x) for x in family_nodes(1, 1.0)) == \
        pytest.approx((2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0), rel=1e-15)
    assert tuple(float(x) for x in family_nodes(2, 1.0)) == \
        pytest.approx((2.0, 2.0, 3.0), rel=1e-15)
    assert tuple(float(x) for x in family_nodes(4, 0.5)) == \
        pytest.approx((7.0 / 3.0, 2.0 / 3.0, 2.0), rel=1e-15)
    with pytest.raises(DomainError):
        family_nodes(2, 0.0)
    with pytest.raises(ValueError):
        family_nodes(5, 0.5)


@pytest.mark.parametrize('family', FAMILIES)
def test_family_nodes_lie_on_the_manifold(family):
    u = np.linspace(0.05, 1.0, 200)
    a, b, c = family_nodes(family, u)
    assert np.max(np.abs(a + b - c - 1.0) / (1.0 + a + b + c)) <= 1e-14
    squares = {
        1: a * a + b * b + c * c - 1.0,
        2: c * c - a * a - b * b - 1.0,
        3: a * a - b * b - c * c - 1.0,
        4: a * a - b * b - c * c - 1.0,
    }[family]
    assert np.max(np.abs(squares) / (1.0 + a * a + b * b + c * c)) <= 1e-14


@pytest.mark.parametrize('family', FAMILIES)
def test_family_kernels_are_positive_and_finite(family):
    u = np.geomspace(1e-6, 1.0, 50)
    kernel = family_kernel(family, u, 0.25)
    assert np.all(np.isfinite(kernel))
    assert np.all(kernel > 0)


@pytest.mark.parametrize('beta', [0.0, 0.25])
def test_graded_rule_integrates_square_root(beta):
    quad = build_quadrature(ModelParams(beta))
    integral = float(np.sum(quad.u_weights * quad.u_nodes ** 0.5))
    assert integral == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_graded_rule_on_singular_integrand():
    params = ModelParams(0.75)

    def integral(quad):
        u = quad.u_nodes
        integrand = weight_W(u, 0.75) * u ** 2 * (1.0 + u ** (2 * 0.75 - 0.5))
        return float(np.sum(quad.u_weights * integrand))

    coarse = integral(build_quadrature(params))
    fine = integral(build_quadrature(params, panels_per_decade=8, order=16))
    assert coarse == pytest.approx(fine, rel=1e-8)


def test_quadrature_tables(quad):
    assert quad.u_nodes.min() > quad.lower
    assert quad.u_nodes.max() < 1.0
    assert quad.u_weights.sum() == pytest.approx(1.0 - quad.lower, rel=1e-13)
    assert quad.scalings.shape == (4, 4, quad.size)
    np.testing.assert_allclose(quad.scalings[1, 1], 1.0)
    with pytest.raises(ValueError):
        quad.W[0] = 1.0


def test_quadrature_is_cached():
    assert build_quadrature(ModelParams(0.0)) is \
        build_quadrature(ModelParams(0.0))


def test_restrict():
    quad = build_quadrature(ModelParams(0.0))
    assert quad.restrict(0.0) is quad
    restricted = quad.restrict(0.1)
    assert restricted.lower == 0.1
    assert restricted.u_nodes.min() > 0.1
    with pytest.raises(ValueError):
        quad.restrict(1.0)
    uniform = build_uniform_quadrature(ModelParams(0.0), 0.01)
    assert uniform.restrict(0.5).grading == 'uniform'


@pytest.mark.parametrize('kwargs', [
    {'order': 2}, {'order': 33}, {'panels_per_decade': 1},
    {'u_floor': 0.0},
])
def test_quadrature_validation(kwargs):
    with pytest.raises(ValueError):
        build_quadrature(ModelParams(0.0), **kwargs)


def test_describe(quad):
    meta = quad.describe()
    assert meta['grading'] == 'geometric'
    assert meta['nodes'] == quad.size == meta['panels'] * meta['order']
