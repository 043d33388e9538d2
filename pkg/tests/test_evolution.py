from functools import lru_cache
import math

import numpy as np
import pytest

from src.data.analytic import GaussianBumpInLogOmega, Rescaled
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Form, SpectrumField
from src.data.var_names import diagnostics_file
from src.models.collision import constant_state_rate
from src.models.evolution import (
    PositivityViolation, StepController, TrajectoryStatus, integrate,
    step_rk4
)
from src.models.resonance import build_quadrature


def constant_field(value: float, nodes: int = 16) -> SpectrumField:
    grid = FrequencyGrid(0.1, 10.0, nodes)
    return SpectrumField(grid, np.full(nodes, value), Form.RESCALED)


class RecordingWriter:
    def __init__(self):
        self.scalars = []
        self.flushed = False

    def add_scalar(self, tag, value, global_step=None):
        self.scalars.append((tag, value, global_step))

    def flush(self):
        self.flushed = True


@pytest.mark.parametrize('kwargs', [
    {'safety': 0.0}, {'safety': 1.5}, {'dt_min': 1e-2, 'dt_init': 1e-3},
    {'dt_init': 1.0}, {'positivity_floor': -1.0}, {'tol_rk': 0.0},
    {'snapshot_every': 0.0},
])
def test_controller_validation(kwargs):
    with pytest.raises(ValueError):
        StepController(**kwargs)


def test_step_keeps_zero_field():
    quad = build_quadrature(ModelParams(0.0))
    field = constant_field(0.0)
    assert np.all(step_rk4(field, 0.1, quad).values == 0.0)


def test_step_keeps_rayleigh_jeans_constant():
    quad = build_quadrature(ModelParams(-0.25))
    stepped = step_rk4(constant_field(1.0), 1e-3, quad)
    np.testing.assert_allclose(stepped.values, 1.0, rtol=0, atol=1e-8)


def test_vanishing_operator_keeps_state(bump):
    quad = build_quadrature(ModelParams(0.0))
    grid = FrequencyGrid(0.1, 10.0, 16)
    field = Rescaled(bump, quad.params).to_field(grid, Form.RESCALED)
    stepped = step_rk4(field, 0.5, quad, eps=1.0)
    np.testing.assert_array_equal(stepped.values, field.values)


def test_step_rejects_bad_input(bump):
    quad = build_quadrature(ModelParams(0.0))
    grid = FrequencyGrid(0.1, 10.0, 16)
    with pytest.raises(ValueError):
        step_rk4(bump.to_field(grid, Form.WAVE_ACTION), 1e-3, quad)
    with pytest.raises(ValueError):
        step_rk4(constant_field(1.0), 0.0, quad)
    with pytest.raises(PositivityViolation) as info:
        step_rk4(constant_field(0.4), 1e-3, quad, positivity_floor=0.5)
    assert info.value.stage == 1
    assert info.value.node == 0


def test_rk4_local_error_is_fifth_order():
    quad = build_quadrature(ModelParams(0.0))
    rate = constant_state_rate(quad)
    assert rate != 0.0
    steps, errors = [], []
    for x in (0.1, 0.05, 0.025):
        dt = x / abs(rate)
        exact = 1.0 / math.sqrt(1.0 - 2.0 * rate * dt)
        stepped = step_rk4(constant_field(1.0), dt, quad)
        steps.append(dt)
        errors.append(np.max(np.abs(stepped.values - exact)))
    slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope > 4.5


def test_constant_state_follows_closed_form():
    quad = build_quadrature(ModelParams(0.0))
    rate = constant_state_rate(quad)
    horizon = min(1.0, 0.2 / abs(rate))
    trajectory = integrate(constant_field(1.0), horizon,
                           StepController(dt_init=1e-2, tol_rk=1e-10), quad)
    assert trajectory.status is TrajectoryStatus.HORIZON_REACHED
    assert trajectory.final_time == horizon
    exact = 1.0 / math.sqrt(1.0 - 2.0 * rate * horizon)
    np.testing.assert_allclose(trajectory.final.values, exact, rtol=1e-8)


def test_rayleigh_jeans_run_stays_put():
    quad = build_quadrature(ModelParams(-0.25))
    writer = RecordingWriter()
    trajectory = integrate(constant_field(1.0), 1.0,
                           StepController(dt_init=1e-2, snapshot_every=0.25),
                           quad, writer=writer)
    assert trajectory.status is TrajectoryStatus.HORIZON_REACHED
    assert trajectory.times == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert trajectory.rejected_positivity == 0
    assert np.max(np.abs(trajectory.final.values - 1.0)) <= 1e-6

    df = trajectory.to_frame()
    assert list(df.columns) == diagnostics_file.features
    assert len(df) == trajectory.accepted + 1
    assert df['t'].iloc[-1] == 1.0
    assert trajectory.relative_drift('mass') <= 1e-6
    assert trajectory.smoothing_budget() >= 0.0

    tags = {tag for tag, _, _ in writer.scalars}
    assert 'evolution/mass' in tags
    assert 'evolution/seminorm_beta' in tags
    assert writer.flushed


def test_large_constant_data_is_flagged_as_blow_up():
    quad = build_quadrature(ModelParams(0.0))
    controller = StepController(dt_init=1e-6, dt_min=1e-6)
    trajectory = integrate(constant_field(1e3), 1.0, controller, quad)
    assert trajectory.status is TrajectoryStatus.BLOW_UP_SUSPECTED
    assert trajectory.accepted == 0
    assert trajectory.final_time == 0.0
    summary = trajectory.summary()
    assert summary['status'] == 'blow_up_suspected'
    assert summary['smoothing_budget'] == 0.0


def test_integrate_validates_input(bump):
    quad = build_quadrature(ModelParams(0.0))
    grid = FrequencyGrid(0.1, 10.0, 16)
    controller = StepController()
    with pytest.raises(ValueError):
        integrate(bump.to_field(grid, Form.WAVE_ACTION), 1.0, controller,
                  quad)
    with pytest.raises(ValueError):
        integrate(constant_field(1.0), 0.0, controller, quad)
    with pytest.raises(PositivityViolation):
        integrate(constant_field(0.0), 1.0, controller, quad)


def bump_field(nodes: int, params: ModelParams,
               omega_min: float = 0.1, omega_max: float = 10.0,
               floor: float = 0.0) -> SpectrumField:
    grid = FrequencyGrid(omega_min, omega_max, nodes)
    bump = GaussianBumpInLogOmega(center=1.0, width=0.3, floor=floor)
    return Rescaled(bump, params).to_field(grid, Form.RESCALED)


@lru_cache(maxsize=None)
def bump_run(beta: float, nodes: int, tol_rk: float):
    # Tails stay far below 1e-4 on [0.01, 100], so no mass leaves the grid.
    params = ModelParams(beta)
    field = bump_field(nodes, params, 0.01, 100.0)
    return integrate(field, 0.5, StepController(tol_rk=tol_rk),
                     build_quadrature(params))


@pytest.mark.slow
def test_bump_run_conserves_mass_and_energy():
    coarse = bump_run(0.0, 256, 1e-8)
    fine = bump_run(0.0, 511, 1e-8 / 16)
    for trajectory in (coarse, fine):
        assert trajectory.status is TrajectoryStatus.HORIZON_REACHED
        assert np.all(trajectory.to_frame()['min_N'] > 0)
    for column in ('mass', 'energy'):
        drift = coarse.relative_drift(column)
        refined = fine.relative_drift(column)
        assert drift <= 1e-4
        assert refined <= max(0.5 * drift, 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize('nodes,tol_rk', [(256, 1e-8), (511, 1e-8 / 16)])
def test_bump_run_entropy_never_decreases(nodes, tol_rk):
    trajectory = bump_run(0.0, nodes, tol_rk)
    assert trajectory.accepted > 1
    assert trajectory.max_entropy_decrease() <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize('beta', [-0.5, 0.0, 0.5])
def test_smoothing_budget_is_grid_independent(beta):
    coarse = bump_run(beta, 256, 1e-8).smoothing_budget()
    fine = bump_run(beta, 511, 1e-8 / 16).smoothing_budget()
    assert math.isfinite(coarse) and math.isfinite(fine)
    assert fine > 0
    assert abs(coarse - fine) <= 0.1 * fine


@pytest.mark.slow
def test_truncated_runs_approach_the_full_run():
    # A floor keeps the small-u end of the operator visible.
    params = ModelParams(0.0)
    quad = build_quadrature(params)
    field0 = bump_field(32, params, floor=0.1)

    def evolve(eps):
        field = field0
        for _ in range(10):
            field = step_rk4(field, 5e-3, quad, eps=eps)
        return field.values

    full = evolve(0.0)
    distances = [np.max(np.abs(evolve(eps) - full)) for eps in (1e-2, 1e-3)]
    assert distances[0] > 0
    assert distances[1] <= 0.5 * distances[0]


@pytest.mark.slow
def test_bump_run_converges_under_grid_refinement():
    params = ModelParams(0.0)
    quad = build_quadrature(params)
    controller = StepController(tol_rk=1e-6)
    coarse = integrate(bump_field(129, params), 0.1, controller, quad)
    fine = integrate(bump_field(257, params), 0.1, controller, quad)
    difference = np.abs(fine.final.values[::2] - coarse.final.values)
    assert np.max(difference) <= 1e-2 * coarse.final.sup_norm
