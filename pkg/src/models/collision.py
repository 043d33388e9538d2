"""
Collision operator evaluators.

Every pointwise evaluator takes a vectorized profile (a SpectrumField, an
analytic spectrum or any callable omega -> values), an array of target
frequencies and a ResonanceQuad, and returns one value per frequency.

* collide_sum_form   n-form, sum of the four sign-family integrals
* collide_plus       n-form, same with every sign of the trilinear form +
* collide_symmetric  N-form, 16-term alternating sum over (j, k)
* collide_split      N-form, alternating sum regrouped into differences
* collide_epsilon    N-form, split form restricted to u in [eps, 1]
"""
from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from src.data.grid import FrequencyGrid
from src.data.spectrum import (
    DomainError, Form, GridFunction, SpectrumField
)
from src.definitions import worker_count
from .resonance import FAMILIES, ResonanceQuad

LOG = logging.getLogger(__name__)

SUMMANDS = (1, 2, 3, 4)

Profile = Callable[[np.ndarray], np.ndarray]

# Frequencies evaluated together; bounds the (nodes x 4 x 4 x u) sample block
CHUNK_SIZE = 32


class Evaluator(str, Enum):
    SUM = 'sum'
    PLUS = 'plus'
    SYMMETRIC = 'symmetric'
    SPLIT = 'split'
    EPSILON = 'epsilon'


class NonFiniteCollisionError(ArithmeticError):
    """Non-finite collision value; usually an extrapolation tail that grows
    too fast for the given beta."""

    def __init__(self, node: int, omega: float):
        super(NonFiniteCollisionError, self).__init__(
            f"non-finite collision value at node {node} (omega={omega!r})"
        )
        self.node = node
        self.omega = omega


def _frequencies(omega) -> np.ndarray:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.ndim != 1:
        raise ValueError("omega must be a scalar or a 1-d array")
    if not np.all(omega > 0):
        raise DomainError("collision frequencies must be > 0")
    return omega


def _check_finite(values: np.ndarray, omega: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        raise NonFiniteCollisionError(node, float(omega[node]))
    return values


def _integrate_u(integrand: np.ndarray, quad: ResonanceQuad) -> np.ndarray:
    # Row-wise reduction, so each frequency's sum is independent of the
    # other rows in the block.
    return np.ascontiguousarray(integrand * quad.u_weights).sum(axis=-1)


# --------------------------------------------------------------------------
# n-form: sign families
# --------------------------------------------------------------------------

def _sum_form(profile: Profile,
              omega: np.ndarray,
              quad: ResonanceQuad,
              families: Sequence[int],
              plus: bool) -> np.ndarray:
    f_w = profile(omega)[:, None]
    total = np.zeros(omega.size)
    for family in families:
        table = quad.family_tables[family - 1]
        sampled = profile(omega[:, None, None] * table[None, :, :])
        f1, f2, f3 = sampled[:, 0], sampled[:, 1], sampled[:, 2]
        if plus:
            combination = f1 * f2 * (f3 + f_w) + f_w * f3 * (f1 + f2)
        else:
            combination = f1 * f2 * (f3 + f_w) - f_w * f3 * (f1 + f2)
        total += _integrate_u(
            quad.family_kernels[family - 1] * combination, quad
        )
    return omega ** quad.params.collision_exponent * total


def collide_sum_form(profile: Profile,
                     omega,
                     quad: ResonanceQuad,
                     families: Sequence[int] = FAMILIES) -> np.ndarray:
    """C(n)(w) = S1 + S2 + S3 + S4 on the n-form profile.

    Each S_k integrates its kernel against
    f1 f2 f3 + f1 f2 fw - f1 fw f3 - fw f2 f3 with f_i = n(u_i(u) w).
    """
    omega = _frequencies(omega)
    values = _sum_form(profile, omega, quad, families, plus=False)
    return _check_finite(values, omega)


def collide_plus(profile: Profile,
                 omega,
                 quad: ResonanceQuad,
                 families: Sequence[int] = FAMILIES) -> np.ndarray:
    """All-plus operator C+; also the gain-only magnitude sum |terms|."""
    omega = _frequencies(omega)
    values = _sum_form(profile, omega, quad, families, plus=True)
    return _check_finite(values, omega)


# --------------------------------------------------------------------------
# N-form: symmetric and split representations
# --------------------------------------------------------------------------

def _sample_scaled(profile: Profile,
                   omega: np.ndarray,
                   quad: ResonanceQuad) -> np.ndarray:
    """N_{i,k} = N(w v_i / v_k), shape (frequency, i, k, u)."""
    return profile(omega[:, None, None, None] * quad.scalings[None])


def _symmetric(profile, omega, quad, summands=SUMMANDS):
    N = _sample_scaled(profile, omega, quad)
    total = np.zeros((omega.size, quad.size))
    for k in (s - 1 for s in summands):
        n1, n2, n3, n4 = N[:, 0, k], N[:, 1, k], N[:, 2, k], N[:, 3, k]
        products = (n2 * n3 * n4, n1 * n3 * n4, n1 * n2 * n4, n1 * n2 * n3)
        for j in range(4):
            total += quad.coefficients[j, k] * products[j]
    return _integrate_u(quad.W * total, quad)


def _split(profile, omega, quad):
    N = _sample_scaled(profile, omega, quad)
    g2, g4 = quad.gain_powers[1], quad.gain_powers[3]
    total = np.zeros((omega.size, quad.size))
    for k in range(4):
        n1, n2, n3, n4 = N[:, 0, k], N[:, 1, k], N[:, 2, k], N[:, 3, k]
        bracket = (quad.gain_diff_21 * n2 * n3 * n4
                   + g2 * (n1 - n2) * n3 * n4
                   + quad.gain_diff_43 * n1 * n2 * n4
                   + g4 * (n3 - n4) * n1 * n2)
        sign = 1.0 if k % 2 else -1.0
        total += sign * quad.loss_powers[k] * bracket
    return _integrate_u(quad.W * total, quad)


def collide_symmetric(profile: Profile,
                      omega,
                      quad: ResonanceQuad,
                      summands: Sequence[int] = SUMMANDS) -> np.ndarray:
    """16-term alternating form of the N-equation right-hand side.

    ``summands`` selects the outer terms k (1-based); summand k alone equals
    w^gamma times the family integral mapped to it by FAMILY_TO_SUMMAND.
    """
    omega = _frequencies(omega)
    if not set(summands) <= set(SUMMANDS):
        raise ValueError(f"summands must lie in {SUMMANDS}, got {summands}")
    return _check_finite(_symmetric(profile, omega, quad, summands), omega)


def collide_split(profile: Profile, omega, quad: ResonanceQuad) \
        -> np.ndarray:
    """Alternating form regrouped as

    sum_k (-1)^k v_k^(2b-1/2) [(v2^g - v1^g) N2 N3 N4 + v2^g (N1 - N2) N3 N4
                              + (v4^g - v3^g) N1 N2 N4 + v4^g (N3 - N4) N1 N2]

    with N_i = N_{i,k} and g = 2b + 3/2.
    """
    omega = _frequencies(omega)
    return _check_finite(_split(profile, omega, quad), omega)


def collide_epsilon(profile: Profile, omega, quad: ResonanceQuad,
                    eps: float) -> np.ndarray:
    """Split form with the u-integral restricted to [eps, 1]."""
    omega = _frequencies(omega)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if eps >= 1.0:
        return np.zeros(omega.size)
    return collide_split(profile, omega, quad.restrict(eps))


def constant_state_rate(quad: ResonanceQuad) -> float:
    """K(beta) such that constant data N = c evolves by dN/dt = K N^3.

    Zero exactly when 2 beta + 3/2 is 0 or 1.
    """
    return float(collide_split(np.ones_like, 1.0, quad)[0])


# --------------------------------------------------------------------------
# Whole grid
# --------------------------------------------------------------------------

_POINTWISE = {
    Evaluator.SUM: lambda p, w, q: _sum_form(p, w, q, FAMILIES, False),
    Evaluator.PLUS: lambda p, w, q: _sum_form(p, w, q, FAMILIES, True),
    Evaluator.SYMMETRIC: _symmetric,
    Evaluator.SPLIT: _split,
    Evaluator.EPSILON: _split,
}

_EXPECTED_FORM = {
    Evaluator.SUM: Form.WAVE_ACTION,
    Evaluator.PLUS: Form.WAVE_ACTION,
    Evaluator.SYMMETRIC: Form.RESCALED,
    Evaluator.SPLIT: Form.RESCALED,
    Evaluator.EPSILON: Form.RESCALED,
}


@dataclass
class CollisionResult:
    grid: FrequencyGrid
    values: np.ndarray
    evaluator: Evaluator
    quad_meta: dict = field(default_factory=dict)
    extrapolated_fraction: float = 0.0

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values)

    def describe(self) -> dict:
        return {
            'evaluator': self.evaluator.value,
            'quadrature': dict(self.quad_meta),
            'extrapolated_fraction': self.extrapolated_fraction,
        }


def _evaluate_chunk(evaluator, profile, omega, quad):
    return _POINTWISE[evaluator](profile, omega, quad)


def extrapolated_share(grid: FrequencyGrid,
                       omega: np.ndarray,
                       scalings: np.ndarray,
                       quad: ResonanceQuad) -> float:
    """Quadrature-weighted share of samples that fall outside the grid.

    Args:
        scalings (np.ndarray): Sample scalings of shape (samples, u).
    """
    weights = quad.u_weights / quad.u_weights.sum()
    outside = ~grid.contains(omega[:, None, None] * scalings[None])
    per_node = (outside.mean(axis=1) * weights).sum(axis=-1)
    return float(per_node.mean())


def sample_scalings(evaluator: Evaluator, quad: ResonanceQuad) -> np.ndarray:
    if evaluator in (Evaluator.SUM, Evaluator.PLUS):
        return quad.family_tables.reshape(-1, quad.size)
    off_diagonal = ~np.eye(4, dtype=bool)
    return quad.scalings[off_diagonal]


def collide_grid(field: GridFunction,
                 quad: ResonanceQuad,
                 evaluator: Evaluator = Evaluator.SPLIT,
                 eps: float = None,
                 n_jobs: int = None,
                 chunk_size: int = CHUNK_SIZE) -> CollisionResult:
    """Apply a pointwise evaluator at every grid node.

    Nodes are evaluated in chunks, possibly in parallel; every node's value
    only depends on its own row, so the result is bitwise independent of
    ``n_jobs`` and ``chunk_size``.
    """
    evaluator = Evaluator(evaluator)
    if isinstance(field, SpectrumField) \
            and field.form is not _EXPECTED_FORM[evaluator]:
        raise ValueError(
            f"evaluator {evaluator.value!r} needs a "
            f"{_EXPECTED_FORM[evaluator].value}-form field, got "
            f"{field.form.value}-form"
        )
    if evaluator is Evaluator.EPSILON:
        eps = quad.params.epsilon if eps is None else eps
        if eps >= 1.0:
            return CollisionResult(
                field.grid, np.zeros(field.grid.node_count), evaluator,
                quad.describe(), 0.0
            )
        quad = quad.restrict(eps)
    n_jobs = worker_count() if n_jobs is None else n_jobs

    nodes = field.grid.nodes
    chunks = [nodes[i:i + chunk_size]
              for i in range(0, nodes.size, chunk_size)]
    parts = Parallel(n_jobs=min(n_jobs, len(chunks)))(
        delayed(_evaluate_chunk)(evaluator, field, chunk, quad)
        for chunk in chunks
    )
    values = _check_finite(np.concatenate(parts), nodes)
    share = extrapolated_share(
        field.grid, nodes, sample_scalings(evaluator, quad), quad
    )
    return CollisionResult(
        grid=field.grid, values=values, evaluator=evaluator,
        quad_meta=quad.describe(), extrapolated_fraction=share
    )
