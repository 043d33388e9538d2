from dataclasses import dataclass, field
import math

import numpy as np

MIN_NODES = 8


@dataclass(frozen=True)
class FrequencyGrid:
    """Log-uniform frequency nodes on [omega_min, omega_max].

    Integrals over omega use the trapezoid rule in log(omega), i.e.
    int g(w) dw = int g(w) w d(log w).
    """
    omega_min: float
    omega_max: float
    node_count: int
    log_step: float = field(init=False)
    log_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        omega_min, omega_max = float(self.omega_min), float(self.omega_max)
        if not (math.isfinite(omega_min) and omega_min > 0.0):
            raise ValueError(f"omega_min must be > 0, got {self.omega_min}")
        if not (math.isfinite(omega_max) and omega_max > omega_min):
            raise ValueError(
                f"omega_max must exceed omega_min, got {self.omega_max}"
            )
        if int(self.node_count) != self.node_count \
                or self.node_count < MIN_NODES:
            raise ValueError(
                f"node_count must be an integer >= {MIN_NODES}, "
                f"got {self.node_count}"
            )
        node_count = int(self.node_count)
        log_min = math.log(omega_min)
        log_step = (math.log(omega_max) - log_min) / (node_count - 1)
        log_nodes = log_min + log_step * np.arange(node_count)
        nodes = np.exp(log_nodes)
        nodes[0], nodes[-1] = omega_min, omega_max
        log_nodes.setflags(write=False)
        nodes.setflags(write=False)

        object.__setattr__(self, 'omega_min', omega_min)
        object.__setattr__(self, 'omega_max', omega_max)
        object.__setattr__(self, 'node_count', node_count)
        object.__setattr__(self, 'log_step', log_step)
        object.__setattr__(self, 'log_nodes', log_nodes)
        object.__setattr__(self, 'nodes', nodes)

    @property
    def log_weights(self) -> np.ndarray:
        """Trapezoid weights in log(omega)."""
        weights = np.full(self.node_count, self.log_step)
        weights[0] = weights[-1] = 0.5 * self.log_step
        return weights

    @property
    def weights(self) -> np.ndarray:
        """Weights of int g(w) dw over the grid support."""
        return self.log_weights * self.nodes

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.node_count,):
            raise ValueError(
                f"expected {self.node_count} values, got {values.shape}"
            )
        return float(np.sum(self.weights * values))

    def contains(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        return (omega >= self.omega_min) & (omega <= self.omega_max)

    def refine(self, factor: int = 2) -> 'FrequencyGrid':
        """Nested refinement: every node of self is a node of the result."""
        if int(factor) != factor or factor < 1:
            raise ValueError(
                f"factor must be a positive integer, got {factor}")
        return FrequencyGrid(
            self.omega_min, self.omega_max,
            (self.node_count - 1) * int(factor) + 1
        )

    def to_dict(self) -> dict:
        return {
            'omega_min': self.omega_min,
            'omega_max': self.omega_max,
            'node_count': self.node_count,
        }
