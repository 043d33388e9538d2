"""
Slow independent evaluations used to validate the fast collision path.

* mc_collision             regularized-delta Monte-Carlo of the raw integral
* trivial_resonance_probe  decay in delta of a trivial sign family
* lemma2_harness           L^p growth of C(f^eps) on (1/2, 3/2)
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import linregress
from tqdm import tqdm

from src.data.analytic import AnalyticSpectrum, LemmaTwoData
from src.data.params import ModelParams
from src.data.var_names import lemma2_file
from src.definitions import worker_count
from .collision import collide_sum_form
from .diagnostics import lp_norm_nonuniform
from .resonance import build_uniform_quadrature

LOG = logging.getLogger(__name__)

Signs = Tuple[int, int, int]

# Sign families (eps1, eps2, eps3) whose resonant set is nontrivial
NONTRIVIAL_FAMILIES: Tuple[Signs, ...] = (
    (1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)
)
MIN_SAMPLES = 10_000
DEFAULT_STRATA = 64
# Guard on the Lemma 2 u-quadrature size
MAX_U_NODES = 400_000


class EmptySupportError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


def _label(signs: Signs) -> str:
    return ''.join('+' if s > 0 else '-' for s in signs)


def _family_index(signs: Signs) -> int:
    """Position of the sign pattern among all eight, for stream seeding."""
    return sum(1 << k for k, s in enumerate(signs) if s < 0)


@dataclass
class OracleEstimate:
    mean: float
    std_error: float
    samples: int
    delta_reg: float
    omega: float = math.nan
    beta: float = math.nan
    seed: int = 0
    per_family: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'omega': self.omega, 'beta': self.beta, 'delta': self.delta_reg,
            'samples': self.samples, 'mean': self.mean,
            'std_error': self.std_error, 'seed': self.seed,
            'per_family': {key: {'mean': mean, 'std_error': error}
                           for key, (mean, error) in self.per_family.items()},
        }


def _band(a: float, b: np.ndarray, c: np.ndarray, tol: float,
          lo: np.ndarray, hi: float):
    """Intervals of {x in [lo, hi] : |a x^2 + b x + c| < tol}.

    The set is the union of at most two intervals; empty ones come back
    with zero length.

    Returns:
        tuple: (l1, r1, l2, r2) arrays.
    """
    n = b.size
    l1, r1 = np.zeros(n), np.zeros(n)
    l2, r2 = np.zeros(n), np.zeros(n)
    if a == 0:
        linear = b != 0
        with np.errstate(divide='ignore', invalid='ignore'):
            x1 = np.where(linear, (-tol - c) / np.where(linear, b, 1.0), 0.0)
            x2 = np.where(linear, (tol - c) / np.where(linear, b, 1.0), 0.0)
        l1 = np.where(linear, np.minimum(x1, x2), lo)
        r1 = np.where(linear, np.maximum(x1, x2),
                      np.where(np.abs(c) < tol, hi, lo))
    else:
        if a < 0:
            a, b, c = -a, -b, -c
        outer = b * b - 4.0 * a * (c - tol)
        inner = b * b - 4.0 * a * (c + tol)
        has_outer = outer > 0
        has_inner = has_outer & (inner > 0)
        root_outer = np.sqrt(np.where(has_outer, outer, 0.0))
        root_inner = np.sqrt(np.where(has_inner, inner, 0.0))
        left = (-b - root_outer) / (2.0 * a)
        right = (-b + root_outer) / (2.0 * a)
        l1 = np.where(has_outer, left, lo)
        r1 = np.where(has_inner, (-b - root_inner) / (2.0 * a),
                      np.where(has_outer, right, lo))
        l2 = np.where(has_inner, (-b + root_inner) / (2.0 * a), lo)
        r2 = np.where(has_inner, right, lo)

    def clip(left, right):
        left = np.clip(left, lo, hi)
        return left, np.maximum(np.clip(right, lo, hi), left)
    l1, r1 = clip(l1, r1)
    l2, r2 = clip(l2, r2)
    return l1, r1, l2, r2


def _stratum(spectrum: AnalyticSpectrum, omega: float, beta: float,
             signs: Signs, delta: float, edges: Tuple[float, float],
             upper: float, count: int, seed: int, stratum: int):
    """Estimate and variance of one family over one omega1 stratum."""
    e1, e2, e3 = signs
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([seed, _family_index(signs), stratum])
    ))
    u = rng.random((2, count))
    a_s, b_s = edges
    w1 = a_s + (b_s - a_s) * u[0]

    # F1 = e1 w1^2 + e2 w2^2 + e3 (w1 + w2 - w)^2 - w^2 as a quadratic in w2
    shift = w1 - omega
    tol = delta * omega * omega
    lo = np.maximum(0.0, -shift)
    l1, r1, l2, r2 = _band(
        float(e2 + e3), 2.0 * e3 * shift,
        e1 * w1 * w1 + e3 * shift * shift - omega * omega, tol, lo, upper
    )
    len1 = r1 - l1
    length = len1 + (r2 - l2)
    v = u[1] * length
    w2 = np.where(v < len1, l1 + v, l2 + (v - len1))
    w2 = np.where(length > 0, w2, upper)
    w3 = np.maximum(w1 + w2 - omega, np.finfo(float).tiny)
    w1 = np.maximum(w1, np.finfo(float).tiny)

    n1, n2, n3 = spectrum(w1), spectrum(w2), spectrum(w3)
    n_w = float(spectrum(np.array([omega]))[0])
    trilinear = n1 * n2 * (n3 + n_w) - n_w * n3 * (n1 + n2)
    weight = omega ** beta * (w1 * w2 * w3) ** (beta + 1.0)
    values = (b_s - a_s) * weight * trilinear * length / (2.0 * tol)
    values = np.where(length > 0, values, 0.0)
    return float(np.mean(values)), float(np.var(values, ddof=1)) / count


def _effective_support(spectrum: AnalyticSpectrum,
                       support: Tuple[float, float] = None):
    support = spectrum.support if support is None else support
    if support is None:
        raise EmptySupportError(
            f"spectrum {spectrum.describe()} has no compact support; pass "
            f"an explicit support"
        )
    lo, hi = support
    if not 0 <= lo < hi or not math.isfinite(hi):
        raise EmptySupportError(f"empty effective support {support}")
    return float(lo), float(hi)


def mc_collision(spectrum: AnalyticSpectrum,
                 omega: float,
                 params: ModelParams,
                 delta_reg: float,
                 samples: int,
                 seed: int,
                 families: Sequence[Signs] = NONTRIVIAL_FAMILIES,
                 support: Tuple[float, float] = None,
                 strata: int = DEFAULT_STRATA,
                 n_jobs: int = None) -> OracleEstimate:
    """Monte-Carlo value of the raw collision integral at ``omega``.

    omega3 = omega1 + omega2 - omega removes the linear delta exactly; the
    quadratic one becomes (1 / 2 delta) 1{|F1| < delta} with F1 measured in
    units of omega^2. omega1 is stratified uniformly over
    [0, hi + omega]; omega2 is drawn uniformly on the exact band
    {|F1| < delta}, so every sample lies on the regularized manifold.

    Args:
        spectrum (AnalyticSpectrum): n-form profile.
        omega (float): Target frequency.
        params (ModelParams): Supplies beta.
        delta_reg (float): Regularization width of the quadratic delta.
        samples (int): Samples per sign family, at least 10^4.
        seed (int): Root seed; stream (seed, family, stratum) per stratum.
        families: Sign patterns (eps1, eps2, eps3) to sum.
        support (tuple, optional): Effective support overriding the
            spectrum's own.
        strata (int): Number of omega1 strata.
        n_jobs (int, optional): Workers over strata.

    Returns:
        OracleEstimate: Sum over families with the stratified standard error.
    """
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if not delta_reg > 0:
        raise ValueError(f"delta_reg must be > 0, got {delta_reg}")
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_SAMPLES}, got {samples}")
    _, hi = _effective_support(spectrum, support)
    upper = hi + omega
    count = max(2, samples // strata)
    edges = np.linspace(0.0, upper, strata + 1)
    n_jobs = worker_count() if n_jobs is None else n_jobs

    jobs = [(signs, s) for signs in families for s in range(strata)]
    parts = Parallel(n_jobs=min(n_jobs, len(jobs)))(
        delayed(_stratum)(spectrum, omega, params.beta, signs, delta_reg,
                          (edges[s], edges[s + 1]), upper, count, seed, s)
        for signs, s in jobs
    )

    per_family = {}
    for i, signs in enumerate(families):
        block = parts[i * strata:(i + 1) * strata]
        mean = math.fsum(m for m, _ in block)
        error = math.sqrt(math.fsum(v for _, v in block))
        per_family[_label(signs)] = (mean, error)
    estimate = OracleEstimate(
        mean=math.fsum(m for m, _ in per_family.values()),
        std_error=math.sqrt(math.fsum(e * e for _, e in per_family.values())),
        samples=count * strata * len(families),
        delta_reg=float(delta_reg),
        omega=float(omega),
        beta=params.beta,
        seed=int(seed),
        per_family=per_family,
    )
    LOG.debug("Oracle at omega=%g, delta=%g: %g +- %g", omega, delta_reg,
              estimate.mean, estimate.std_error)
    return estimate


# --------------------------------------------------------------------------
# Trivial resonances
# --------------------------------------------------------------------------

def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x; NaN if any y <= 0."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0) or np.any(x <= 0):
        return math.nan
    return float(linregress(np.log(x), np.log(y)).slope)


@dataclass
class ProbeResult:
    family: Signs
    deltas: List[float]
    estimates: List[OracleEstimate]
    slope: float

    def to_dict(self) -> dict:
        return {
            'family': _label(self.family),
            'slope': self.slope,
            'estimates': [e.to_dict() for e in self.estimates],
        }


def trivial_resonance_probe(spectrum: AnalyticSpectrum,
                            omega: float,
                            params: ModelParams,
                            delta_list: Sequence[float],
                            samples: int,
                            seed: int,
                            family: Signs = (1, 1, -1),
                            support: Tuple[float, float] = None,
                            n_jobs: int = None) -> ProbeResult:
    """Regularized contribution of one trivial sign family for each delta.

    The (+,+,-) family sits on the lines omega1 = omega or omega2 = omega,
    where the trilinear form vanishes; its regularized value decays with
    delta. The (-,-,-) family has an empty band and gives exactly 0.
    """
    estimates = [
        mc_collision(spectrum, omega, params, delta, samples, seed,
                     families=(family,), support=support, n_jobs=n_jobs)
        for delta in delta_list
    ]
    slope = fit_slope(delta_list, [abs(e.mean) for e in estimates])
    return ProbeResult(tuple(family), list(delta_list), estimates, slope)


# --------------------------------------------------------------------------
# Lemma 2
# --------------------------------------------------------------------------

@dataclass
class Lemma2Result:
    p: float
    beta: float
    rows: List[dict]
    slope: float

    @property
    def data_norms(self) -> List[float]:
        return [row['data_norm'] for row in self.rows]

    def to_dict(self) -> dict:
        return {'p': self.p, 'beta': self.beta, 'slope': self.slope,
                'rows': self.rows, 'expected_slope': 1.0 - 3.0 / self.p}


def lemma2_omegas(eps: float) -> np.ndarray:
    """Nodes on [1/2, 3/2]: spacing eps/8, refined to eps^2/8 near 1."""
    coarse = np.linspace(0.5, 1.5, int(math.ceil(8.0 / eps)) + 1)
    fine = np.linspace(1.0 - 3.0 * eps * eps, 1.0 + 3.0 * eps * eps, 49)
    return np.union1d(coarse, fine)


def lemma2_harness(p: float,
                   eps_list: Sequence[float],
                   params: ModelParams,
                   order: int = 4,
                   max_u_nodes: int = MAX_U_NODES,
                   chunk_size: int = 8,
                   n_jobs: int = None,
                   progress: bool = False) -> Lemma2Result:
    """||C(f^eps)||_{L^p(1/2, 3/2)} for each eps.

    C is the n-form sum evaluator on uniform u-panels of width eps^2 / 2,
    sampled on `lemma2_omegas(eps)`.

    Raises:
        ResolutionError: The u-rule resolving eps^2 would exceed
            ``max_u_nodes``.
    """
    if not 1.0 <= p < 3.0:
        raise ValueError(f"p must lie in [1, 3), got {p}")
    n_jobs = worker_count() if n_jobs is None else n_jobs
    rows = []
    for eps in tqdm(eps_list, disable=not progress, unit='eps'):
        data = LemmaTwoData(eps, p)
        panel_width = 0.5 * eps * eps
        needed = math.ceil(1.0 / panel_width) * order
        if needed > max_u_nodes:
            raise ResolutionError(
                f"resolving eps={eps} needs {needed} u-nodes, more than "
                f"{max_u_nodes}"
            )
        quad = build_uniform_quadrature(params, panel_width, order)
        omegas = lemma2_omegas(eps)
        chunks = [omegas[i:i + chunk_size]
                  for i in range(0, omegas.size, chunk_size)]
        parts = Parallel(n_jobs=min(n_jobs, len(chunks)))(
            delayed(collide_sum_form)(data, chunk, quad) for chunk in chunks
        )
        values = np.concatenate(parts)
        row = dict(zip(lemma2_file.features, (
            float(eps), float(p), data.lp_norm(p),
            lp_norm_nonuniform(omegas, values, p), quad.size, omegas.size
        )))
        LOG.info("Lemma 2 at eps=%g: |f|=%g, |C(f)|=%g", eps,
                 row['data_norm'], row['collision_norm'])
        rows.append(row)
    slope = fit_slope([r['eps'] for r in rows],
                      [r['collision_norm'] for r in rows])
    return Lemma2Result(float(p), params.beta, rows, slope)
