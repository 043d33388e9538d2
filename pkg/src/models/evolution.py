"""
Time integration of dN/dt = C_eps(N) on a frequency grid.

Classical RK4 stages evaluated with the split collision form, adaptive step
doubling, and step rejection on positivity violations (never clipping).
"""
from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from tqdm import tqdm

from src.data.spectrum import Form, SpectrumField, log_derivative
from src.data.var_names import diagnostics_file
from .collision import (
    Evaluator, NonFiniteCollisionError, collide_grid, extrapolated_share,
    sample_scalings
)
from .diagnostics import DiagnosticsRecord, make_record
from .resonance import ResonanceQuad

LOG = logging.getLogger(__name__)

# Stage index used for the combined RK4 update
RESULT_STAGE = 5


class PositivityViolation(ArithmeticError):
    """A stage input or the step result dropped below the positivity floor.

    Stages 1 to 4 are the RK4 stage inputs, stage 5 is the combined update.
    """

    def __init__(self, node: int, stage: int, value: float = math.nan):
        super(PositivityViolation, self).__init__(
            f"positivity violated at node {node} in stage {stage} "
            f"(value={value!r})"
        )
        self.node = node
        self.stage = stage
        self.value = value


class NonFinite(ArithmeticError):

    def __init__(self, node: int):
        super(NonFinite, self).__init__(f"non-finite value at node {node}")
        self.node = node


class TrajectoryStatus(str, Enum):
    HORIZON_REACHED = 'horizon_reached'
    BLOW_UP_SUSPECTED = 'blow_up_suspected'


@dataclass(frozen=True)
class StepController:
    """Step-size policy of `integrate`.

    Args:
        dt_init (float): First trial step.
        safety (float): Factor of the cubic-growth cap
            dt <= safety / (|N|_inf (|N|_inf + |DN|_inf)).
        dt_min (float): Steps below this end the run as blow-up-suspected.
        dt_max (float): Largest step ever taken.
        positivity_floor (float): Accepted states stay strictly above it.
        tol_rk (float): Relative local-error tolerance of step doubling.
        snapshot_every (float, optional): Snapshot cadence in model time;
            t = 0 and the final time are always saved.
    """
    dt_init: float = 1e-3
    safety: float = 0.5
    dt_min: float = 1e-10
    dt_max: float = 0.1
    positivity_floor: float = 0.0
    tol_rk: float = 1e-8
    snapshot_every: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if not 0.0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError(
                "need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if self.positivity_floor < 0:
            raise ValueError("positivity_floor must be >= 0")
        if not self.tol_rk > 0:
            raise ValueError("tol_rk must be > 0")
        if self.snapshot_every is not None and not self.snapshot_every > 0:
            raise ValueError("snapshot_every must be > 0")

    def to_dict(self) -> dict:
        return {
            'dt_init': self.dt_init, 'safety': self.safety,
            'dt_min': self.dt_min, 'dt_max': self.dt_max,
            'positivity_floor': self.positivity_floor,
            'tol_rk': self.tol_rk, 'snapshot_every': self.snapshot_every,
        }


@dataclass
class Trajectory:
    times: List[float] = field(default_factory=list)
    snapshots: List[SpectrumField] = field(default_factory=list)
    diagnostics: List[DiagnosticsRecord] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    rejected_positivity: int = 0
    status: TrajectoryStatus = TrajectoryStatus.HORIZON_REACHED

    @property
    def final(self) -> SpectrumField:
        return self.snapshots[-1]

    @property
    def final_time(self) -> float:
        return self.diagnostics[-1].t

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([record.to_dict() for record in self.diagnostics],
                            columns=diagnostics_file.features)

    def smoothing_budget(self) -> float:
        """Trapezoid-in-time integral of [DN]_beta^2."""
        df = self.to_frame()
        if len(df) < 2:
            return 0.0
        return float(trapezoid(df['seminorm_beta'] ** 2, df['t']))

    def relative_drift(self, column: str) -> float:
        values = self.to_frame()[column]
        return float(abs(values.iloc[-1] - values.iloc[0])
                     / abs(values.iloc[0]))

    def max_entropy_decrease(self) -> float:
        """Largest one-step entropy decrease (0 for a monotone run)."""
        entropy = self.to_frame()['entropy'].to_numpy()
        if entropy.size < 2:
            return 0.0
        return float(max(0.0, -np.min(np.diff(entropy))))

    def summary(self) -> dict:
        return {
            'status': self.status.value,
            'final_time': self.final_time,
            'accepted': self.accepted,
            'rejected': self.rejected,
            'rejected_positivity': self.rejected_positivity,
            'mass_drift': self.relative_drift('mass'),
            'energy_drift': self.relative_drift('energy'),
            'max_entropy_decrease': self.max_entropy_decrease(),
            'smoothing_budget': self.smoothing_budget(),
        }


# --------------------------------------------------------------------------
# Single step
# --------------------------------------------------------------------------

def _guard(values: np.ndarray, floor: float, stage: int, strict: bool) \
        -> np.ndarray:
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NonFinite(int(np.flatnonzero(bad)[0]))
    low = values <= floor if strict else values < floor
    if np.any(low):
        node = int(np.flatnonzero(low)[0])
        raise PositivityViolation(node, stage, float(values[node]))
    return values


def _truncated(quad: ResonanceQuad, eps: float = None) \
        -> Optional[ResonanceQuad]:
    """The rule on [eps, 1], or None when eps >= 1 (vanishing operator)."""
    eps = quad.params.epsilon if eps is None else eps
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if eps >= 1.0:
        return None
    return quad.restrict(eps)


def _rate_function(field: SpectrumField,
                   quad: Optional[ResonanceQuad],
                   n_jobs: int = None) -> Callable[[np.ndarray], np.ndarray]:
    """values -> C_eps(N) at the grid nodes of ``field``."""
    if quad is None:
        return lambda values: np.zeros_like(values)

    def rate(values):
        try:
            return collide_grid(field.with_values(values), quad,
                                Evaluator.SPLIT, n_jobs=n_jobs).values
        except NonFiniteCollisionError as error:
            raise NonFinite(error.node) from error
    return rate


def _rk4(y, k1, dt, rate, floor, strict):
    y2 = _guard(y + 0.5 * dt * k1, floor, 2, strict)
    k2 = rate(y2)
    y3 = _guard(y + 0.5 * dt * k2, floor, 3, strict)
    k3 = rate(y3)
    y4 = _guard(y + dt * k3, floor, 4, strict)
    k4 = rate(y4)
    update = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _guard(update, floor, RESULT_STAGE, strict)


def step_rk4(field: SpectrumField,
             dt: float,
             quad: ResonanceQuad,
             eps: float = None,
             positivity_floor: float = 0.0,
             n_jobs: int = None) -> SpectrumField:
    """One classical RK4 step of dN/dt = C_eps(N).

    Raises:
        PositivityViolation: A stage input or the result has a value below
            ``positivity_floor``.
        NonFinite: A stage produced a non-finite value.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if field.form is not Form.RESCALED:
        raise ValueError("step_rk4 integrates N-form fields")
    rate = _rate_function(field, _truncated(quad, eps), n_jobs)
    y = _guard(field.values, positivity_floor, 1, strict=False)
    values = _rk4(y, rate(y), dt, rate, positivity_floor, strict=False)
    return field.with_values(values)


# --------------------------------------------------------------------------
# Adaptive integration
# --------------------------------------------------------------------------

def _growth_cap(field: SpectrumField, safety: float) -> float:
    sup = field.sup_norm
    bound = sup * (sup + log_derivative(field).sup_norm)
    return math.inf if bound == 0 else safety / bound


def _step_factor(err: float, tol: float) -> float:
    if err == 0:
        return 2.0
    return min(2.0, max(0.2, 0.9 * (tol / err) ** 0.2))


def integrate(field0: SpectrumField,
              horizon: float,
              controller: StepController,
              quad: ResonanceQuad,
              eps: float = None,
              n_jobs: int = None,
              progress: bool = False,
              writer=None) -> Trajectory:
    """Integrate dN/dt = C_eps(N) from N0 up to ``horizon``.

    Steps are controlled by step doubling: the two-half-step solution is
    kept when its relative difference to the full step, divided by 15, is
    within ``tol_rk``. The step is further capped by the cubic-growth
    bound of the controller. Positivity violations halve the step; a step
    below ``dt_min`` ends the run with status blow_up_suspected.

    Args:
        field0 (SpectrumField): Strictly positive N-form initial data.
        horizon (float): Final model time.
        controller (StepController): Step-size policy.
        quad (ResonanceQuad): u-quadrature; its params are the model params.
        eps (float, optional): u-truncation; defaults to params.epsilon.
        n_jobs (int, optional): Workers of each collision evaluation.
        progress (bool): Show a tqdm bar in model time.
        writer (optional): TensorBoard SummaryWriter receiving every
            diagnostic of every accepted step.

    Returns:
        Trajectory: Snapshots, per-step diagnostics and step counts.
    """
    if field0.form is not Form.RESCALED:
        raise ValueError("integrate evolves N-form fields")
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    params = quad.params
    floor = controller.positivity_floor
    _guard(field0.values, floor, 1, strict=True)

    truncated = _truncated(quad, eps)
    rate = _rate_function(field0, truncated, n_jobs)
    reference_min = float(np.min(field0.values))
    # Depends on the grid and the rule only, not on the values.
    share = 0.0 if truncated is None else extrapolated_share(
        field0.grid, field0.grid.nodes,
        sample_scalings(Evaluator.SPLIT, truncated), truncated
    )
    trajectory = Trajectory()

    def record(t, dt, state):
        entry = make_record(t, dt, state, params, reference_min,
                            extrapolated_fraction=share)
        trajectory.diagnostics.append(entry)
        if writer is not None:
            for key, value in entry.to_dict().items():
                writer.add_scalar(f'evolution/{key}', value,
                                  global_step=len(trajectory.diagnostics) - 1)
        return entry

    def snapshot(t, state):
        trajectory.times.append(t)
        trajectory.snapshots.append(state)

    t = 0.0
    state = field0
    record(t, 0.0, state)
    snapshot(t, state)
    next_snapshot = controller.snapshot_every or math.inf
    dt_ctrl = min(controller.dt_init,
                  _growth_cap(state, controller.safety))
    k1 = rate(state.values)

    LOG.info("Integrating to t=%g: beta=%s, %d nodes, %d u-nodes",
             horizon, params.beta, state.grid.node_count, quad.size)
    pbar = tqdm(total=horizon, disable=not progress, unit='t')
    while t < horizon:
        if dt_ctrl < controller.dt_min:
            trajectory.status = TrajectoryStatus.BLOW_UP_SUSPECTED
            LOG.warning("Step %g below dt_min at t=%g, stopping", dt_ctrl, t)
            break
        dt = min(dt_ctrl, horizon - t, next_snapshot - t)
        y = state.values
        try:
            full = _rk4(y, k1, dt, rate, floor, strict=True)
            middle = _rk4(y, k1, 0.5 * dt, rate, floor, strict=True)
            k1_middle = rate(middle)
            half = _rk4(middle, k1_middle, 0.5 * dt, rate, floor,
                        strict=True)
        except PositivityViolation as violation:
            trajectory.rejected_positivity += 1
            LOG.debug("Rejected step at t=%g: %s", t, violation)
            dt_ctrl = 0.5 * dt
            continue

        scale = max(float(np.max(np.abs(half))), np.finfo(float).tiny)
        err = float(np.max(np.abs(half - full))) / (15.0 * scale)
        factor = _step_factor(err, controller.tol_rk)
        if err > controller.tol_rk:
            trajectory.rejected += 1
            dt_ctrl = dt * factor
            continue

        # Land exactly on the horizon and snapshot times.
        if dt == horizon - t:
            t_new = horizon
        elif dt == next_snapshot - t:
            t_new = next_snapshot
        else:
            t_new = t + dt
        pbar.update(t_new - t)
        t = t_new
        state = state.with_values(half)
        trajectory.accepted += 1
        record(t, dt, state)
        if t >= next_snapshot:
            snapshot(t, state)
            next_snapshot += controller.snapshot_every
        k1 = rate(state.values)
        dt_ctrl = min(dt_ctrl if dt < dt_ctrl else dt * factor,
                      controller.dt_max,
                      _growth_cap(state, controller.safety))
    pbar.close()
    if trajectory.times[-1] != t:
        snapshot(t, state)
    if writer is not None:
        writer.flush()
    LOG.info("Stopped at t=%g (%s): %d accepted, %d rejected, "
             "%d positivity rejections", t, trajectory.status.value,
             trajectory.accepted, trajectory.rejected,
             trajectory.rejected_positivity)
    return trajectory
