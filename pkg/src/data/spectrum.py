"""
Spectrum fields on a log-uniform frequency grid.

A field stores values at the grid nodes and samples them anywhere on
(0, inf): monotone cubic (PCHIP) interpolation in (log omega, value) inside
the grid, and the field's extrapolation policy outside of it.
"""
from enum import Enum
import logging

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grid import FrequencyGrid
from .params import ModelParams

LOG = logging.getLogger(__name__)

# Nodes used at each end of the grid by the power-law tail fit
TAIL_FIT_NODES = 4


class DomainError(ValueError):
    pass


class NegativeSpectrumError(ValueError):
    pass


class GridTooSmallError(ValueError):
    pass


class Form(str, Enum):
    WAVE_ACTION = 'n'
    RESCALED = 'N'


class Extrapolation(str, Enum):
    CONSTANT = 'constant'
    POWER_LAW = 'power-law-fit'


def _tail_exponent(log_omega: np.ndarray, values: np.ndarray) -> float:
    if np.all(values > 0):
        sign = 1.0
    elif np.all(values < 0):
        sign = -1.0
    else:
        return 0.0
    slope, _ = np.polyfit(log_omega, np.log(sign * values), 1)
    return float(slope)


class GridFunction:
    """Signed values on a FrequencyGrid with interpolation and extrapolation.

    Args:
        grid (FrequencyGrid): Grid carrying the values.
        values (array-like): One finite value per node.
        extrapolation (Extrapolation, optional): Policy outside the grid.
    """

    def __init__(self,
                 grid: FrequencyGrid,
                 values,
                 extrapolation: Extrapolation = Extrapolation.CONSTANT):
        values = np.array(values, dtype=float)
        if values.shape != (grid.node_count,):
            raise ValueError(
                f"expected {grid.node_count} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite value at node {bad}")
        values.setflags(write=False)

        self.grid = grid
        self.values = values
        self.extrapolation = Extrapolation(extrapolation)
        self._interpolant = PchipInterpolator(
            grid.log_nodes, values, extrapolate=False
        )
        if self.extrapolation is Extrapolation.POWER_LAW:
            k = min(TAIL_FIT_NODES, grid.node_count)
            self.tail_exponents = (
                _tail_exponent(grid.log_nodes[:k], values[:k]),
                _tail_exponent(grid.log_nodes[-k:], values[-k:]),
            )
        else:
            self.tail_exponents = (0.0, 0.0)

    def sample(self, omega) -> np.ndarray:
        """Evaluate at arbitrary positive frequencies (any array shape)."""
        omega = np.asarray(omega, dtype=float)
        if not np.all(omega > 0):
            raise DomainError("sampling frequencies must be > 0")
        nodes = self.grid.nodes
        out = np.empty(omega.shape)

        below = omega < nodes[0]
        above = omega > nodes[-1]
        inside = ~(below | above)

        if np.any(inside):
            w = omega[inside]
            x = np.clip(np.log(w), self.grid.log_nodes[0],
                        self.grid.log_nodes[-1])
            inner = self._interpolant(x)
            j = np.minimum(np.searchsorted(nodes, w), nodes.size - 1)
            hit = nodes[j] == w
            inner[hit] = self.values[j[hit]]
            out[inside] = inner
        if np.any(below):
            out[below] = self.values[0] * (
                omega[below] / nodes[0]) ** self.tail_exponents[0]
        if np.any(above):
            out[above] = self.values[-1] * (
                omega[above] / nodes[-1]) ** self.tail_exponents[1]
        return out

    __call__ = sample

    def with_values(self, values) -> 'GridFunction':
        return GridFunction(self.grid, values, self.extrapolation)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


class SpectrumField(GridFunction):
    """Nonnegative spectrum values tagged with their form (n or N).

    N-form values are N(w) = w^(2 beta + 3/2) n(w).
    """

    def __init__(self,
                 grid: FrequencyGrid,
                 values,
                 form: Form = Form.RESCALED,
                 extrapolation: Extrapolation = Extrapolation.CONSTANT):
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            bad = int(np.flatnonzero(values < 0)[0])
            raise NegativeSpectrumError(
                f"negative spectrum value {values[bad]!r} at node {bad}"
            )
        super(SpectrumField, self).__init__(grid, values, extrapolation)
        self.form = Form(form)

    def with_values(self, values) -> 'SpectrumField':
        return SpectrumField(self.grid, values, self.form, self.extrapolation)

    def __repr__(self):
        return (f"SpectrumField(form={self.form.value}, "
                f"extrapolation={self.extrapolation.value}, grid={self.grid})")


def convert_form(field: SpectrumField,
                 params: ModelParams,
                 target: Form) -> SpectrumField:
    target = Form(target)
    if field.form is target:
        return field
    factor = field.grid.nodes ** params.gamma_scale
    if target is Form.RESCALED:
        values = field.values * factor
    else:
        values = field.values / factor
    return SpectrumField(field.grid, values, target, field.extrapolation)


def log_derivative(field: GridFunction) -> GridFunction:
    """DN = w dN/dw by fourth-order differences in log(w).

    Centered five-point stencil in the interior, one-sided five-point
    stencils on the two nodes closest to each end. Four nodes get the
    derivative of their interpolating cubic.
    """
    n = field.grid.node_count
    if n < 4:
        raise GridTooSmallError(
            f"log_derivative needs at least 4 nodes, got {n}"
        )
    f = field.values
    h = field.grid.log_step
    if n == 4:
        d = np.array([
            18.0 * (f[1] - f[0]) - 9.0 * (f[2] - f[0]) + 2.0 * (f[3] - f[0]),
            -2.0 * (f[0] - f[1]) + 6.0 * (f[2] - f[1]) - (f[3] - f[1]),
            (f[0] - f[2]) - 6.0 * (f[1] - f[2]) + 2.0 * (f[3] - f[2]),
            -2.0 * (f[0] - f[3]) + 9.0 * (f[1] - f[3]) - 18.0 * (f[2] - f[3]),
        ]) / (6.0 * h)
        return GridFunction(field.grid, d, Extrapolation.CONSTANT)
    d = np.empty(n)
    # Written as differences so that constant data gives exactly zero.
    d[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * h)
    d[0] = (48.0 * (f[1] - f[0]) - 36.0 * (f[2] - f[0])
            + 16.0 * (f[3] - f[0]) - 3.0 * (f[4] - f[0])) / (12.0 * h)
    d[1] = (3.0 * (f[1] - f[0]) + 18.0 * (f[2] - f[1])
            - 6.0 * (f[3] - f[1]) + (f[4] - f[1])) / (12.0 * h)
    d[-1] = -(48.0 * (f[-2] - f[-1]) - 36.0 * (f[-3] - f[-1])
              + 16.0 * (f[-4] - f[-1]) - 3.0 * (f[-5] - f[-1])) / (12.0 * h)
    d[-2] = -(3.0 * (f[-2] - f[-1]) + 18.0 * (f[-3] - f[-2])
              - 6.0 * (f[-4] - f[-2]) + (f[-5] - f[-2])) / (12.0 * h)
    return GridFunction(field.grid, d, Extrapolation.CONSTANT)


def tabulate(profile,
             grid: FrequencyGrid,
             form: Form = Form.RESCALED,
             extrapolation: Extrapolation = Extrapolation.CONSTANT) \
        -> SpectrumField:
    """Tabulate a vectorized callable on the grid nodes."""
    return SpectrumField(grid, profile(grid.nodes), form, extrapolation)
