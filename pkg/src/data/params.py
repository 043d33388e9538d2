from dataclasses import dataclass, field, replace
import math

from src.definitions import ALPHA


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Model parameters of the kinetic equation at alpha = 1/2.

    Args:
        beta (float): Nonlinearity exponent, strictly inside (-1, 1).
        p0 (int, optional): Integrability index of the X-norm. Defaults to the
            smallest admissible integer for ``beta``.
        epsilon (float, optional): Truncation of the u-integral, in [0, 1).
    """
    beta: float
    p0: int = None
    epsilon: float = 0.0
    gamma_scale: float = field(init=False)

    def __post_init__(self):
        beta = float(self.beta)
        if not math.isfinite(beta) or not -1.0 < beta < 1.0:
            raise ParameterError(f"beta must lie in (-1, 1), got {self.beta}")
        object.__setattr__(self, 'beta', beta)

        p0 = self.default_p0(beta) if self.p0 is None else self.p0
        if int(p0) != p0 or p0 <= 0:
            raise ParameterError(f"p0 must be a positive integer, got {p0}")
        p0 = int(p0)
        if p0 <= self.p0_lower_bound(beta):
            raise ParameterError(
                f"p0={p0} must exceed {self.p0_lower_bound(beta):.6g} "
                f"for beta={beta}"
            )
        object.__setattr__(self, 'p0', p0)

        epsilon = float(self.epsilon)
        if not 0.0 <= epsilon < 1.0:
            raise ParameterError(
                f"epsilon must lie in [0, 1), got {self.epsilon}"
            )
        object.__setattr__(self, 'epsilon', epsilon)
        object.__setattr__(self, 'gamma_scale', 2.0 * beta + 1.5)

    @staticmethod
    def p0_lower_bound(beta: float) -> float:
        return max(1.0 / (4.0 * (1.0 - beta)), 1.0 / (4.0 * (1.0 + beta)))

    @classmethod
    def default_p0(cls, beta: float) -> int:
        return math.floor(cls.p0_lower_bound(beta)) + 1

    def with_epsilon(self, epsilon: float) -> 'ModelParams':
        return replace(self, epsilon=epsilon)

    @property
    def collision_exponent(self) -> float:
        """Power of omega in front of the u-integral, 4*beta + 3."""
        return 4.0 * self.beta + 3.0

    @property
    def loss_exponent(self) -> float:
        """Exponent 2*beta - 1/2 carried by v_k in the N-form integrand."""
        return 2.0 * self.beta - 0.5

    @property
    def kz_mass_exponent(self) -> float:
        return (2.0 * self.beta + 3.0 - ALPHA) / (3.0 * ALPHA)

    @property
    def kz_energy_exponent(self) -> float:
        return (2.0 * self.beta + 3.0) / (3.0 * ALPHA)

    @property
    def is_rayleigh_jeans_constant(self) -> bool:
        """Whether constant N is a Rayleigh-Jeans state (gamma_scale 0, 1)."""
        return self.gamma_scale in (0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            'beta': self.beta,
            'p0': self.p0,
            'epsilon': self.epsilon,
            'gamma_scale': self.gamma_scale,
            'alpha': ALPHA,
        }
