"""
Algebra of the resonant manifold at alpha = 1/2 and the u-quadrature.

The manifold is parameterized by u in [0, 1] through the scalings

    v1 = (1+u)/(1+u+u^2), v2 = 1, v3 = u(1+u)/(1+u+u^2), v4 = u/(1+u+u^2)

and, for the four nontrivial sign families, by the tables u_i(u) below.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import logging
import math
from typing import NamedTuple

import numpy as np

from src.data.params import ModelParams
from src.data.spectrum import DomainError
from src.definitions import U_FLOOR

LOG = logging.getLogger(__name__)

FAMILIES = (1, 2, 3, 4)

# Summand k of the symmetric form (1-based, v_k in the denominator of the
# scalings) that each family integral equals, up to the factor w^gamma.
FAMILY_TO_SUMMAND = {1: 2, 2: 4, 3: 1, 4: 3}


class ResonanceNodes(NamedTuple):
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    v4: np.ndarray


def _as_unit_interval(u, open_left: bool = False) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    lower_ok = u > 0 if open_left else u >= 0
    if not np.all(lower_ok & (u <= 1)):
        interval = '(0, 1]' if open_left else '[0, 1]'
        raise DomainError(f"u must lie in {interval}")
    return u


def v_values(u) -> ResonanceNodes:
    u = _as_unit_interval(u)
    d = 1.0 + u + u * u
    return ResonanceNodes(
        (1.0 + u) / d, np.ones_like(u), u * (1.0 + u) / d, u / d
    )


def weight_W(u, beta: float) -> np.ndarray:
    """W(u) = (v1 v2 v3 v4)^(-beta - 1/2) / (1 + u + u^2)."""
    u = _as_unit_interval(u, open_left=True)
    v = v_values(u)
    return (v.v1 * v.v3 * v.v4) ** (-beta - 0.5) / (1.0 + u + u * u)


def family_nodes(family: int, u):
    """Scalings (u1, u2, u3) of the sign family ``family``.

    Frequencies on the manifold are omega_i = u_i * omega.
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family}")
    u = _as_unit_interval(u, open_left=family in (2, 4))
    d = 1.0 + u + u * u
    if family == 1:
        return (1.0 + u) / d, u * (1.0 + u) / d, u / d
    if family == 2:
        return u + 1.0, (u + 1.0) / u, d / u
    if family == 3:
        return d / (u + 1.0), u / (u + 1.0), u
    return d / ((u + 1.0) * u), 1.0 / (u + 1.0), 1.0 / u


def family_kernel(family: int, u, beta: float) -> np.ndarray:
    """u-weight of the family integrand (omega^(4 beta + 3) factored out)."""
    u = _as_unit_interval(u, open_left=family in (2, 4))
    d = 1.0 + u + u * u
    up = 1.0 + u
    if family == 1:
        return (u * up) ** (2 * beta + 2) / d ** (3 * beta + 4)
    if family == 2:
        return d ** (beta + 1) * up ** (2 * beta + 2) / u ** (2 * beta + 3)
    if family == 3:
        return d ** (beta + 1) * u ** (2 * beta + 2) / up ** (2 * beta + 3)
    if family == 4:
        return d ** (beta + 1) / (u * up) ** (2 * beta + 3)
    raise ValueError(f"family must be one of {FAMILIES}, got {family}")


@dataclass(frozen=True)
class ResonanceQuad:
    """u-quadrature with every per-node table the collision evaluators use.

    Array layout: ``v[i]`` is v_{i+1}; ``scalings[i, k]`` is v_i / v_k;
    ``coefficients[j, k]`` is (-1)^(j+k) v_j^gamma v_k^(2 beta - 1/2) with
    gamma = 2 beta + 3/2; ``family_tables[f - 1, i]`` is u_{i+1} of family f.
    """
    params: ModelParams
    lower: float
    u_floor: float
    grading: str
    panels: int
    order: int
    resolution: float
    u_nodes: np.ndarray = field(repr=False, compare=False)
    u_weights: np.ndarray = field(repr=False, compare=False)
    v: np.ndarray = field(init=False, repr=False, compare=False)
    W: np.ndarray = field(init=False, repr=False, compare=False)
    scalings: np.ndarray = field(init=False, repr=False, compare=False)
    coefficients: np.ndarray = field(init=False, repr=False, compare=False)
    loss_powers: np.ndarray = field(init=False, repr=False, compare=False)
    gain_powers: np.ndarray = field(init=False, repr=False, compare=False)
    gain_diff_21: np.ndarray = field(init=False, repr=False, compare=False)
    gain_diff_43: np.ndarray = field(init=False, repr=False, compare=False)
    family_tables: np.ndarray = field(init=False, repr=False, compare=False)
    family_kernels: np.ndarray = field(init=False, repr=False,
                                       compare=False)

    def __post_init__(self):
        u = self.u_nodes
        beta = self.params.beta
        gamma = self.params.gamma_scale
        v = np.stack(v_values(u))
        W = weight_W(u, beta)
        gain_powers = v ** gamma
        loss_powers = v ** self.params.loss_exponent
        sign = (-1.0) ** np.add.outer(np.arange(4), np.arange(4))
        coefficients = sign[:, :, None] * gain_powers[:, None, :] \
            * loss_powers[None, :, :]
        scalings = v[:, None, :] / v[None, :, :]

        # v2^g - v1^g and v4^g - v3^g carry u^2 and u^(g+1) factors that
        # plain subtraction would lose near u = 0.
        d = 1.0 + u + u * u
        gain_diff_21 = -np.expm1(gamma * np.log1p(-u * u / d))
        gain_diff_43 = -gain_powers[3] * np.expm1(gamma * np.log1p(u))

        family_tables = np.stack([np.stack(family_nodes(f, u))
                                  for f in FAMILIES])
        family_kernels = np.stack([family_kernel(f, u, beta)
                                   for f in FAMILIES])

        tables = {
            'v': v, 'W': W, 'scalings': scalings,
            'coefficients': coefficients, 'loss_powers': loss_powers,
            'gain_powers': gain_powers, 'gain_diff_21': gain_diff_21,
            'gain_diff_43': gain_diff_43, 'family_tables': family_tables,
            'family_kernels': family_kernels,
        }
        for name, array in tables.items():
            assert np.all(np.isfinite(array)), f"non-finite table {name}"
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        self.u_nodes.setflags(write=False)
        self.u_weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.u_nodes.size

    def restrict(self, eps: float) -> 'ResonanceQuad':
        """Same rule rebuilt on [eps, 1]; ``self`` if eps is below the rule."""
        if eps <= self.lower:
            return self
        if eps >= 1.0:
            raise ValueError(f"eps must be < 1, got {eps}")
        if self.grading == 'uniform':
            return build_uniform_quadrature(
                self.params, self.resolution, self.order, lower=eps
            )
        return build_quadrature(
            self.params, int(self.resolution), self.order,
            u_floor=self.u_floor, lower=eps
        )

    def describe(self) -> dict:
        return {
            'grading': self.grading,
            'lower': self.lower,
            'u_floor': self.u_floor,
            'panels': self.panels,
            'order': self.order,
            'resolution': self.resolution,
            'nodes': self.size,
        }


def _gauss_legendre(edges: np.ndarray, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def _check_order(order: int) -> None:
    if int(order) != order or not 4 <= order <= 32:
        raise ValueError(f"order must be an integer in [4, 32], got {order}")


@lru_cache(maxsize=64)
def build_quadrature(params: ModelParams,
                     panels_per_decade: int = 4,
                     order: int = 8,
                     u_floor: float = U_FLOOR,
                     lower: float = None) -> ResonanceQuad:
    """Composite Gauss-Legendre on geometrically graded panels of [a, 1].

    a = max(epsilon, u_floor) unless ``lower`` is given. Grading is
    exponent-agnostic, so one rule serves every endpoint power of the
    integrand.
    """
    _check_order(order)
    if int(panels_per_decade) != panels_per_decade or panels_per_decade < 2:
        raise ValueError(
            f"panels_per_decade must be an integer >= 2, got "
            f"{panels_per_decade}"
        )
    if not 0.0 < u_floor < 1.0:
        raise ValueError(f"u_floor must lie in (0, 1), got {u_floor}")
    if lower is None:
        lower = max(params.epsilon, u_floor)
    if not 0.0 < lower < 1.0:
        raise ValueError(f"lower bound must lie in (0, 1), got {lower}")

    panels = max(1, math.ceil(-math.log10(lower) * panels_per_decade))
    edges = np.geomspace(lower, 1.0, panels + 1)
    edges[0], edges[-1] = lower, 1.0
    u_nodes, u_weights = _gauss_legendre(edges, order)
    LOG.debug("Built graded quadrature: beta=%s, lower=%g, %d panels x %d",
              params.beta, lower, panels, order)
    return ResonanceQuad(
        params=params, lower=float(lower), u_floor=float(u_floor),
        grading='geometric', panels=panels, order=int(order),
        resolution=float(panels_per_decade),
        u_nodes=u_nodes, u_weights=u_weights,
    )


@lru_cache(maxsize=16)
def build_uniform_quadrature(params: ModelParams,
                             panel_width: float,
                             order: int = 4,
                             lower: float = None,
                             u_floor: float = U_FLOOR) -> ResonanceQuad:
    """Composite Gauss-Legendre on equal panels of width <= panel_width."""
    _check_order(order)
    if not 0.0 < panel_width <= 1.0:
        raise ValueError(f"panel_width must lie in (0, 1], got {panel_width}")
    if lower is None:
        lower = max(params.epsilon, u_floor)
    panels = max(1, math.ceil((1.0 - lower) / panel_width))
    edges = np.linspace(lower, 1.0, panels + 1)
    u_nodes, u_weights = _gauss_legendre(edges, order)
    return ResonanceQuad(
        params=params, lower=float(lower), u_floor=float(u_floor),
        grading='uniform', panels=panels, order=int(order),
        resolution=float(panel_width),
        u_nodes=u_nodes, u_weights=u_weights,
    )
