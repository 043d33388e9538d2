"""
Closed-form reference spectra.

Every spectrum is a vectorized callable omega -> value. Spectra are n-form
profiles unless stated otherwise; `Rescaled` turns an n-form profile into
its N-form counterpart without tabulation.
"""
from dataclasses import dataclass, field
import math
from typing import Optional, Tuple

import numpy as np

from .grid import FrequencyGrid
from .params import ModelParams
from .spectrum import Extrapolation, Form, SpectrumField

# Gaussian tails below this fraction of the peak count as outside the support
SUPPORT_TOLERANCE = 1e-17


def smoothed_indicator(x) -> np.ndarray:
    """C^2 bump equal to 1 on |x| <= 1/2 and vanishing for |x| >= 1."""
    t = np.clip(2.0 * (1.0 - np.abs(np.asarray(x, dtype=float))), 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


class AnalyticSpectrum:
    kind = None

    def __call__(self, omega) -> np.ndarray:
        raise NotImplementedError

    @property
    def support(self) -> Optional[Tuple[float, float]]:
        """Interval outside of which the spectrum vanishes, if any."""
        return None

    def to_field(self,
                 grid: FrequencyGrid,
                 form: Form = Form.WAVE_ACTION,
                 extrapolation: Extrapolation = Extrapolation.CONSTANT) \
            -> SpectrumField:
        return SpectrumField(grid, self(grid.nodes), form, extrapolation)

    def describe(self) -> dict:
        return {'kind': self.kind}


@dataclass(frozen=True)
class RayleighJeans(AnalyticSpectrum):
    c1: float = 1.0
    c2: float = 0.0
    kind = 'rayleigh_jeans'

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0 or (self.c1 == 0 and self.c2 == 0):
            raise ValueError(
                f"need c1, c2 >= 0 and not both zero, got ({self.c1}, "
                f"{self.c2})"
            )

    def __call__(self, omega):
        return 1.0 / (self.c1 * np.asarray(omega, dtype=float) + self.c2)

    def describe(self):
        return {'kind': self.kind, 'c1': self.c1, 'c2': self.c2}


@dataclass(frozen=True)
class PowerLaw(AnalyticSpectrum):
    exponent: float
    amplitude: float = 1.0
    kind = 'power_law'

    def __call__(self, omega):
        return self.amplitude * np.asarray(omega, dtype=float) ** self.exponent

    def log_derivative(self, omega):
        return self.exponent * self(omega)

    def describe(self):
        return {'kind': self.kind, 'exponent': self.exponent,
                'amplitude': self.amplitude}


class KolmogorovZakharov(PowerLaw):
    """Constant-flux power law, n = amplitude * w^(-x).

    ``flux='mass'`` gives x = (2 beta + 3 - alpha) / (3 alpha), ``'energy'``
    gives x = (2 beta + 3) / (3 alpha).
    """

    def __init__(self, params: ModelParams, flux: str = 'mass',
                 amplitude: float = 1.0):
        if flux == 'mass':
            exponent = -params.kz_mass_exponent
        elif flux == 'energy':
            exponent = -params.kz_energy_exponent
        else:
            raise ValueError(f"flux must be 'mass' or 'energy', got {flux!r}")
        super(KolmogorovZakharov, self).__init__(exponent, amplitude)
        object.__setattr__(self, 'flux', flux)

    @property
    def kind(self):
        return f'kolmogorov_zakharov_{self.flux}'


@dataclass(frozen=True)
class GaussianBumpInLogOmega(AnalyticSpectrum):
    center: float = 1.0
    width: float = 0.5
    amplitude: float = 1.0
    floor: float = 0.0
    kind = 'gaussian_bump'

    def __post_init__(self):
        if self.center <= 0 or self.width <= 0:
            raise ValueError("bump center and width must be positive")
        if self.amplitude < 0 or self.floor < 0:
            raise ValueError("bump amplitude and floor must be nonnegative")

    def _shape(self, omega):
        x = (np.log(np.asarray(omega, dtype=float)) - math.log(self.center)) \
            / self.width
        return x, np.exp(-0.5 * x * x)

    def __call__(self, omega):
        _, g = self._shape(omega)
        return self.floor + self.amplitude * g

    def log_derivative(self, omega):
        x, g = self._shape(omega)
        return -self.amplitude * g * x / self.width

    @property
    def support(self):
        if self.floor > 0:
            return None
        reach = self.width * math.sqrt(-2.0 * math.log(SUPPORT_TOLERANCE))
        return (self.center * math.exp(-reach), self.center * math.exp(reach))

    def describe(self):
        return {'kind': self.kind, 'center': self.center, 'width': self.width,
                'amplitude': self.amplitude, 'floor': self.floor}


@dataclass(frozen=True)
class RandomBumps(AnalyticSpectrum):
    """Seeded superposition of Gaussian bumps in log(omega)."""
    seed: int
    count: int = 3
    floor: float = 0.0
    bumps: Tuple[GaussianBumpInLogOmega, ...] = field(init=False,
                                                      repr=False)
    kind = 'random_bumps'

    def __post_init__(self):
        rng = np.random.Generator(np.random.Philox(self.seed))
        bumps = tuple(
            GaussianBumpInLogOmega(
                center=float(np.exp(rng.uniform(-0.5, 0.5))),
                width=float(rng.uniform(0.2, 0.45)),
                amplitude=float(rng.uniform(0.5, 1.5)),
            )
            for _ in range(self.count)
        )
        object.__setattr__(self, 'bumps', bumps)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        total = np.full(omega.shape, self.floor)
        for bump in self.bumps:
            total = total + bump(omega)
        return total

    @property
    def support(self):
        if self.floor > 0:
            return None
        ends = [bump.support for bump in self.bumps]
        return (min(lo for lo, _ in ends), max(hi for _, hi in ends))

    def describe(self):
        return {'kind': self.kind, 'seed': self.seed, 'count': self.count,
                'floor': self.floor}


@dataclass(frozen=True)
class LemmaTwoData(AnalyticSpectrum):
    """Three-bump data concentrating at 1/3, 2/3 and 1.

    f = e^(-2/p) 1((w - 1/3)/e^2) + e^(-1/p) 1((w - 2/3)/e)
        + e^(-2/p) 1((w - 1)/e^2), with 1 the smoothed indicator.
    """
    eps: float
    p: float
    kind = 'lemma_two'

    def __post_init__(self):
        if not 1.0 <= self.p < 3.0:
            raise ValueError(f"p must lie in [1, 3), got {self.p}")
        # The three supports must stay disjoint and inside (0, 3/2).
        if not 0.0 < self.eps < 0.25:
            raise ValueError(f"eps must lie in (0, 1/4), got {self.eps}")

    @property
    def components(self):
        """(height, center, half_width) of the three bumps."""
        e, p = self.eps, self.p
        return (
            (e ** (-2.0 / p), 1.0 / 3.0, e * e),
            (e ** (-1.0 / p), 2.0 / 3.0, e),
            (e ** (-2.0 / p), 1.0, e * e),
        )

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        total = np.zeros(omega.shape)
        for height, center, half_width in self.components:
            total = total + height * smoothed_indicator(
                (omega - center) / half_width)
        return total

    @property
    def support(self):
        e = self.eps
        return (1.0 / 3.0 - e * e, 1.0 + e * e)

    def lp_norm(self, p: float = None, order: int = 32) -> float:
        """L^p norm by Gauss-Legendre on the plateau and both flanks."""
        p = self.p if p is None else p
        x, w = np.polynomial.legendre.leggauss(order)
        pieces = ((-1.0, -0.5), (-0.5, 0.5), (0.5, 1.0))
        total = 0.0
        for height, center, half_width in self.components:
            for a, b in pieces:
                t = 0.5 * (b - a) * x + 0.5 * (b + a)
                values = height * smoothed_indicator(t)
                total += 0.5 * (b - a) * half_width * np.sum(w * values ** p)
        return float(total ** (1.0 / p))

    def describe(self):
        return {'kind': self.kind, 'eps': self.eps, 'p': self.p}


@dataclass(frozen=True)
class WeightModulated(AnalyticSpectrum):
    """f = g / m with m the two-piece weight and g smooth in [3/4, 1]."""
    theta: float
    gamma_w: float
    seed: int = 0
    kind = 'weight_modulated'

    def _modulation(self, omega):
        rng = np.random.Generator(np.random.Philox(self.seed))
        frequency = rng.uniform(0.5, 2.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        return 0.875 + 0.125 * np.sin(frequency * np.log(omega) + phase)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        inverse_weight = np.where(omega <= 1.0, omega ** self.theta,
                                  omega ** (-self.gamma_w))
        return inverse_weight * self._modulation(omega)

    def describe(self):
        return {'kind': self.kind, 'theta': self.theta,
                'gamma_w': self.gamma_w, 'seed': self.seed}


@dataclass(frozen=True)
class Dilated(AnalyticSpectrum):
    """The dilated profile w -> base(lam * w)."""
    base: AnalyticSpectrum
    lam: float
    kind = 'dilated'

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    def __call__(self, omega):
        return self.base(self.lam * np.asarray(omega, dtype=float))

    @property
    def support(self):
        inner = self.base.support
        if inner is None:
            return None
        return (inner[0] / self.lam, inner[1] / self.lam)


@dataclass(frozen=True)
class Enveloped(AnalyticSpectrum):
    """Pointwise product base * envelope (e.g. RJ restricted to a bump)."""
    base: AnalyticSpectrum
    envelope: AnalyticSpectrum
    kind = 'enveloped'

    def __call__(self, omega):
        return self.base(omega) * self.envelope(omega)

    @property
    def support(self):
        return self.envelope.support


@dataclass(frozen=True)
class Rescaled(AnalyticSpectrum):
    """N-form view N(w) = w^(2 beta + 3/2) n(w) of an n-form profile."""
    base: AnalyticSpectrum
    params: ModelParams
    kind = 'rescaled'

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        return omega ** self.params.gamma_scale * self.base(omega)

    @property
    def support(self):
        return self.base.support


def build_spectrum(spec: dict, params: ModelParams) -> AnalyticSpectrum:
    """Build an analytic spectrum from a config mapping with a 'kind' key."""
    spec = dict(spec)
    kind = spec.pop('kind', None)
    if kind == 'rayleigh_jeans':
        return RayleighJeans(**spec)
    if kind == 'power_law':
        return PowerLaw(**spec)
    if kind in ('kolmogorov_zakharov_mass', 'kolmogorov_zakharov_energy'):
        return KolmogorovZakharov(params, flux=kind.rsplit('_', 1)[1], **spec)
    if kind == 'gaussian_bump':
        return GaussianBumpInLogOmega(**spec)
    if kind == 'random_bumps':
        return RandomBumps(**spec)
    if kind == 'lemma_two':
        return LemmaTwoData(**spec)
    if kind == 'weight_modulated':
        return WeightModulated(**spec)
    raise ValueError(f"unknown spectrum kind {kind!r}")
