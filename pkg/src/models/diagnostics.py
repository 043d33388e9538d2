import dataclasses
from dataclasses import dataclass
import logging
import math
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from src.data.analytic import AnalyticSpectrum, Dilated
from src.data.params import ModelParams
from src.data.spectrum import (
    Form, GridFunction, SpectrumField, convert_form, log_derivative
)
from .collision import (
    NonFiniteCollisionError, collide_plus, collide_sum_form
)
from .resonance import ResonanceQuad

LOG = logging.getLogger(__name__)

TINY = 1e-300


class SeminormDomainError(ValueError):
    pass


class NonFiniteNormalizer(ArithmeticError):
    pass


@dataclass(frozen=True)
class WeightedNormSpec:
    """Two-piece weight m(w) = w^-theta for w <= 1 and w^gamma_w for w > 1.

    ``gamma_w`` is unrelated to the scaling exponent 2 beta + 3/2.
    """
    theta: float
    gamma_w: float


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    mass: float
    energy: float
    entropy: float
    min_N: float
    max_N: float
    sup_DN: float
    seminorm_beta: float
    extrapolated_fraction: float
    lp_DN_p0: float
    x_norm: float
    positivity_margin: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _wave_action(field: SpectrumField, params: ModelParams = None) \
        -> SpectrumField:
    if field.form is Form.WAVE_ACTION:
        return field
    if params is None:
        raise ValueError("params are needed to convert an N-form field")
    return convert_form(field, params, Form.WAVE_ACTION)


def mass(field: SpectrumField, params: ModelParams = None) -> float:
    """int n(w) w dw over the grid support."""
    n = _wave_action(field, params)
    return n.grid.integrate(n.values * n.grid.nodes)


def energy(field: SpectrumField, params: ModelParams = None) -> float:
    """int n(w) w^2 dw over the grid support."""
    n = _wave_action(field, params)
    return n.grid.integrate(n.values * n.grid.nodes ** 2)


def entropy(field: SpectrumField, params: ModelParams = None) -> float:
    """int log n(w) w dw over the grid support."""
    n = _wave_action(field, params)
    if np.any(n.values <= 0):
        node = int(np.flatnonzero(n.values <= 0)[0])
        raise ValueError(f"entropy needs n > 0, got {n.values[node]!r} at "
                         f"node {node}")
    return n.grid.integrate(np.log(n.values) * n.grid.nodes)


def weight(omega, spec: WeightedNormSpec) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    return np.where(omega <= 1.0, omega ** (-spec.theta),
                    omega ** spec.gamma_w)


def weighted_sup_norm(field: GridFunction, spec: WeightedNormSpec) -> float:
    return float(np.max(weight(field.grid.nodes, spec)
                        * np.abs(field.values)))


def lp_norm(field: GridFunction, p: float) -> float:
    """(int |f|^p dw)^(1/p) over the grid support."""
    return field.grid.integrate(np.abs(field.values) ** p) ** (1.0 / p)


def lp_norm_nonuniform(omegas, values, p: float) -> float:
    """(int |values|^p dw)^(1/p) by the trapezoid rule on sorted nodes."""
    return float(trapezoid(np.abs(values) ** p, omegas) ** (1.0 / p))


def smoothing_seminorm(dn_field: GridFunction, beta: float) -> float:
    """Band-restricted fractional seminorm [F]_beta.

    [F]^2 = iint 1_{[2/3,3/2]}(w'/w) |F' - F|^2 |w' - w|^-(b+1) (w w')^(b/2)
          + iint 1_{[1/2,2]}(w'/w) |F' - F|^2 |w' - w|^(2b) (w w')^-(b+1/2)

    Off-diagonal cell pairs use the product trapezoid rule in log(w). Each
    diagonal cell uses the closed form obtained with F linear in log(w) on
    the cell.
    """
    if not -1.0 < beta < 1.0:
        raise SeminormDomainError(
            f"seminorm kernels are not integrable across the diagonal for "
            f"beta={beta}"
        )
    grid = dn_field.grid
    F = dn_field.values
    w = grid.nodes
    h = grid.log_step
    cell = grid.log_weights

    narrow = math.log(1.5)
    wide = math.log(2.0)
    contributions = []
    for d in range(1, int(wide / h * (1 + 1e-12)) + 1):
        a, b = w[:-d], w[d:]
        jump = (F[d:] - F[:-d]) ** 2
        gap = b - a
        product = a * b
        kernel = gap ** (2.0 * beta) * product ** (-(beta + 0.5))
        if d * h <= narrow * (1 + 1e-12):
            kernel = kernel + gap ** (-(beta + 1.0)) * product ** (beta / 2.0)
        measure = cell[:-d] * cell[d:] * product
        # Both orderings (w, w') and (w', w).
        contributions.append(2.0 * float(np.sum(jump * kernel * measure)))

    slope = np.gradient(F, h)
    diagonal = slope ** 2 * w * (
        cell ** (3.0 - beta) * 2.0 / ((2.0 - beta) * (3.0 - beta))
        + cell ** (4.0 + 2.0 * beta) * 2.0
        / ((3.0 + 2.0 * beta) * (4.0 + 2.0 * beta))
    )
    contributions.append(float(np.sum(diagonal)))
    return math.sqrt(math.fsum(contributions))


def x_norm(field: SpectrumField, params: ModelParams) -> float:
    """||N||_inf + ||DN||_{2 p0} + ||DN||_inf."""
    N = field if field.form is Form.RESCALED \
        else convert_form(field, params, Form.RESCALED)
    dn = log_derivative(N)
    return N.sup_norm + lp_norm(dn, 2 * params.p0) + dn.sup_norm


def make_record(t: float,
                dt: float,
                field: SpectrumField,
                params: ModelParams,
                reference_min: float,
                extrapolated_fraction: float = 0.0) -> DiagnosticsRecord:
    """Every diagnostic of an N-form state at time t."""
    N = field if field.form is Form.RESCALED \
        else convert_form(field, params, Form.RESCALED)
    n = convert_form(N, params, Form.WAVE_ACTION)
    dn = log_derivative(N)
    lp_dn = lp_norm(dn, 2 * params.p0)
    min_N = float(np.min(N.values))
    return DiagnosticsRecord(
        t=float(t),
        dt=float(dt),
        mass=mass(n),
        energy=energy(n),
        entropy=entropy(n),
        min_N=min_N,
        max_N=float(np.max(N.values)),
        sup_DN=dn.sup_norm,
        seminorm_beta=smoothing_seminorm(dn, params.beta),
        extrapolated_fraction=float(extrapolated_fraction),
        lp_DN_p0=lp_dn,
        x_norm=N.sup_norm + lp_dn + dn.sup_norm,
        positivity_margin=min_N / reference_min if reference_min > 0
        else math.nan,
    )


def stationarity_residual(spectrum: AnalyticSpectrum,
                          params: ModelParams,
                          quad: ResonanceQuad,
                          omegas: Sequence[float]) -> np.ndarray:
    """|C(n)(w)| / C+(|n|)(w), a cancellation measure in [0, 1]."""
    assert quad.params == params, "quadrature built for other parameters"
    omegas = np.asarray(omegas, dtype=float)
    try:
        normalizer = collide_plus(lambda x: np.abs(spectrum(x)), omegas,
                                  quad)
    except NonFiniteCollisionError as error:
        raise NonFiniteNormalizer(
            f"gain-only magnitude is not finite at node {error.node} "
            f"(omega={error.omega!r})"
        ) from error
    values = collide_sum_form(spectrum, omegas, quad)
    return np.where(normalizer > 0, np.abs(values) / np.where(
        normalizer > 0, normalizer, 1.0), 0.0)


def scaling_covariance_residual(spectrum: AnalyticSpectrum,
                                lam: float,
                                omega: float,
                                params: ModelParams,
                                quad: ResonanceQuad) -> float:
    """Relative defect of C(n(lam .))(w) = lam^-(4b+3) C(n)(lam w)."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    assert quad.params == params, "quadrature built for other parameters"
    scale = lam ** (-params.collision_exponent)
    lhs = collide_sum_form(Dilated(spectrum, lam), omega, quad)[0]
    rhs = scale * collide_sum_form(spectrum, lam * omega, quad)[0]
    return abs(lhs - rhs) / (abs(rhs) + TINY)


def lemma1_admissible(beta: float, theta: float, gamma_w: float) -> bool:
    return -0.5 <= beta <= 0.0 and gamma_w > 2 * beta + 2 \
        and theta > -2 * beta - 1


def lemma1_ratio(spectrum: AnalyticSpectrum,
                 spec: WeightedNormSpec,
                 quad: ResonanceQuad,
                 omegas: Sequence[float]) -> float:
    """||C+(f)||_{theta,gamma} / ||f||_{theta,gamma}^3 sampled on omegas."""
    omegas = np.asarray(omegas, dtype=float)
    m = weight(omegas, spec)
    gained = collide_plus(spectrum, omegas, quad)
    norm_f = float(np.max(m * np.abs(spectrum(omegas))))
    return float(np.max(m * np.abs(gained))) / norm_f ** 3
