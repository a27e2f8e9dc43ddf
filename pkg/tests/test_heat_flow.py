import math

import numpy as np
import pytest

from relaxlim.config import settings
from relaxlim.geometry import DirectorField
from relaxlim.grid_spectral import SpectralGrid, VectorField, l2_norm
from relaxlim.heat_flow import (
    HeatFlowState,
    harmonic_energy,
    heat_rhs,
    heat_second_time_derivative,
    heat_solve,
    heat_step,
)
from relaxlim.scalar_oracle import lift_to_equator


def test_constant_director_is_stationary(grid2d):
    values = np.zeros(grid2d.shape + (3,))
    values[..., 2] = 1.0
    d = DirectorField(grid=grid2d, values=values)
    run = heat_solve(d, t_final=0.05, dt=0.01)
    np.testing.assert_allclose(run.final.d0.values, values, atol=1e-14)
    assert harmonic_energy(run.final.d0) < 1e-20


def test_rhs_of_equator_lift(grid32, x32, tangent_of):
    # Laplace d + |grad d|^2 d = theta'' (-sin theta, cos theta, 0) for d = lift(theta)
    theta = 0.3 * np.sin(x32)
    d = lift_to_equator(theta, grid32)
    expected = (-0.3 * np.sin(x32))[:, None] * tangent_of(theta)
    np.testing.assert_allclose(heat_rhs(d).values, expected, atol=1e-12)
    assert harmonic_energy(d) == pytest.approx(0.5 * 0.09 * math.pi, rel=1e-12)


def test_second_time_derivative_of_equator_lift(tangent_of):
    grid = SpectralGrid.create(n=64)
    x = grid.coordinates()[0]
    # theta = 0.5 sin x solves theta_t = theta_xx, so theta_t = -theta and theta_tt = theta
    theta = 0.5 * np.sin(x)
    d = lift_to_equator(theta, grid)
    expected = theta[:, None] * tangent_of(theta) - (theta**2)[:, None] * d.values
    np.testing.assert_allclose(heat_second_time_derivative(d).values, expected, atol=1e-10)


def _heat_error(dt: float) -> float:
    grid = SpectralGrid.create(n=32)
    x = grid.coordinates()[0]
    run = heat_solve(lift_to_equator(np.sin(x), grid), t_final=1.0, dt=dt, stride=10_000)
    exact = lift_to_equator(math.exp(-1.0) * np.sin(x), grid)
    return l2_norm(VectorField(grid=grid, values=run.final.d0.values - exact.values))


def test_heat_flow_is_second_order():
    coarse = _heat_error(0.01)
    fine = _heat_error(0.005)
    assert 3.4 <= coarse / fine <= 4.6


def test_energy_decreases_and_unit_norm_holds(grid32, x32):
    d = lift_to_equator(1.2 * np.sin(x32) + 0.4 * np.cos(2 * x32), grid32)
    run = heat_solve(d, t_final=0.2, dt=1e-3, stride=20)
    energies = run.trace.column("dirichlet_energy")
    assert np.all(np.diff(energies) <= 0.0)
    assert run.max_energy_increase <= settings.ENERGY_MONOTONE_TOLERANCE * (1 + energies[0])
    assert np.max(run.trace.column("unit_violation")) < 1e-13


def test_sampling_and_exact_times(equator_data):
    d_in = equator_data[0]
    run = heat_solve(d_in, t_final=0.1, dt=0.01, stride=5, sample_steps=[3, 99])
    assert [s.step for s in run.trajectory] == [0, 3, 5, 10]
    assert [s.t for s in run.trajectory] == [0.0, 3 * 0.01, 5 * 0.01, 10 * 0.01]
    assert run.at_step(5).t == 5 * 0.01
    assert run.trace.header[0] == "t"
    assert len(run.trace) == 4
    with pytest.raises(KeyError):
        run.at_step(7)


def test_single_step_and_bad_arguments(equator_data):
    state = HeatFlowState(t=0.0, d0=equator_data[0])
    nxt = heat_step(state, 0.01)
    assert nxt.step == 1 and nxt.t == 0.01
    with pytest.raises(ValueError):
        heat_step(state, 0.0)
    with pytest.raises(ValueError):
        heat_solve(equator_data[0], t_final=0.1, dt=-1.0)
    with pytest.raises(ValueError):
        heat_solve(equator_data[0], t_final=0.1, dt=0.01, stride=0)
