import math

import numpy as np
import pytest

from relaxlim.errors import (
    BoundUndefinedError,
    InsufficientSnapshotsError,
    TimeMismatchError,
    TraceTooShortError,
)
from relaxlim.geometry import DirectorField
from relaxlim.grid_spectral import SpectralGrid, VectorField, random_band_limited_field
from relaxlim.heat_flow import HeatFlowState
from relaxlim.layer_remainder import (
    LayerData,
    M_value,
    RemainderState,
    T_eps,
    bound_curve,
    c0_surrogate,
    compute_D,
    d_tangency_violation,
    decomposition_deviation,
    energy_E,
    energy_envelope,
    energy_F,
    energy_pair,
    epsilon0,
    eval_regular,
    eval_singular,
    extract_remainder,
    fit_C_arrays,
    fit_C_running,
    gronwall_check,
    remainder_bound_quantity,
    remainder_residual,
)
from relaxlim.scalar_oracle import exact_equator_solution, lift_to_equator
from relaxlim.wave_map import WaveMapState


def _wave_state(grid, theta, theta_t, eps, t, tangent_of):
    d = lift_to_equator(theta, grid)
    v = VectorField(grid=grid, values=theta_t[:, None] * tangent_of(theta))
    return WaveMapState(t=t, eps=eps, d=d, v=v)


def _heat_state(grid, x, amplitude, t):
    return HeatFlowState(t=t, d0=lift_to_equator(amplitude * math.exp(-t) * np.sin(x), grid))


def test_layer_data_for_equator_profile(equator_data, x32, tangent_of):
    d_in, dtilde, theta0, theta1 = equator_data
    D = compute_D(d_in, dtilde)
    # D = (theta1 - theta0'') tangent, theta0'' = -theta0
    np.testing.assert_allclose(D.values, (theta1 + theta0)[:, None] * tangent_of(theta0), atol=1e-12)
    assert d_tangency_violation(d_in, D) < 1e-12

    layer = LayerData(D=D, eps=0.1)
    np.testing.assert_allclose(layer.value(0.0).values, -0.1 * D.values)
    np.testing.assert_allclose(layer.velocity(0.0).values, D.values)
    np.testing.assert_allclose(layer.value(0.1).values, -0.1 * math.exp(-1.0) * D.values)


def test_remainder_at_start_and_energy_equals_M(equator_data):
    d_in, dtilde, _, _ = equator_data
    eps = 0.05
    D = compute_D(d_in, dtilde)
    rem = extract_remainder(
        WaveMapState(t=0.0, eps=eps, d=d_in, v=dtilde), HeatFlowState(t=0.0, d0=d_in), D
    )
    np.testing.assert_allclose(rem.dR.values, math.sqrt(eps) * D.values, atol=1e-14)
    np.testing.assert_allclose(rem.vR.values, 0.0, atol=1e-12)
    assert energy_E(rem) == pytest.approx(M_value(D), rel=1e-10)

    with pytest.raises(TimeMismatchError):
        extract_remainder(
            WaveMapState(t=0.01, eps=eps, d=d_in, v=dtilde), HeatFlowState(t=0.0, d0=d_in), D
        )


def test_energies_of_a_single_mode(grid32, x32):
    a, eps = 0.7, 0.25
    dR = np.stack([a * np.sin(x32), 0 * x32, 0 * x32], axis=-1)
    rem = RemainderState(
        t=0.0,
        eps=eps,
        dR=VectorField(grid=grid32, values=dR),
        vR=VectorField(grid=grid32, values=np.zeros((32, 3))),
    )
    assert energy_E(rem) == pytest.approx(108 * math.pi * a**2, rel=1e-12)
    assert energy_F(rem) == pytest.approx(18 * math.pi * a**2, rel=1e-12)
    pair = energy_pair(rem)
    assert pair.E == pytest.approx(energy_E(rem)) and pair.F == pytest.approx(energy_F(rem))
    # |v_R|_{H^2}^2 + |d_R|_{H^3}^2 / eps = 16 pi a^2 / eps
    assert remainder_bound_quantity(rem) == pytest.approx(64 * math.pi * a**2, rel=1e-12)


def test_closed_form_bounds():
    M, C, T = 1.0, 1.0, 1.0
    assert epsilon0(M, C, T) == pytest.approx(1.0 / (2 * math.e - 1))
    assert epsilon0(M, 0.0, T) == 0.5
    assert T_eps(M, C, T, 0.2) == T
    assert T_eps(M, C, T, 0.4) == pytest.approx(math.log(1.4 / 0.8))
    assert T_eps(M, 0.0, T, 0.4) == T

    # bound_curve >= envelope exactly when M >= 1
    assert bound_curve(3.0, C, 0.05, 0.5) >= energy_envelope(3.0, C, 0.05, 0.5)
    assert bound_curve(0.5, C, 0.05, 0.5) < energy_envelope(0.5, C, 0.05, 0.5)
    assert energy_envelope(M, 0.0, 0.1, 0.0) == pytest.approx(2.0 / 0.9)

    with pytest.raises(BoundUndefinedError):
        bound_curve(M, C, 0.4, 1.0)
    with pytest.raises(BoundUndefinedError):
        energy_envelope(M, C, 0.4, 1.0)
    with pytest.raises(ValueError):
        bound_curve(-1.0, C, 0.1, 0.1)


def test_c0_surrogate():
    # eps0 < 1/2: denominator vanishes at (eps0, T)
    assert c0_surrogate(1.0, 1.0, epsilon0(1.0, 1.0, 1.0), 1.0) == math.inf
    # C = 0 gives eps0 = 1/2 and a finite value 2M / (1 - eps0)
    assert c0_surrogate(1.0, 0.0, 0.5, 1.0) == pytest.approx(4.0)


def test_decomposition_matches_oracle_on_random_fields():
    grid = SpectralGrid.create(n=16, dim=2)
    rng = np.random.default_rng(11)
    fields = [random_band_limited_field(grid, rng, max_mode=3) for _ in range(6)]
    for eps in (0.3, 0.01):
        for t in (0.0, eps, 10 * eps):
            assert decomposition_deviation(*fields, eps, t) <= 1e-11

    d0, w0, w00, D, dR, vR = fields
    singular = eval_singular(d0, w0, w00, D, dR, vR, 0.1, 0.05)
    np.testing.assert_allclose(
        singular.total.values, singular.S1.values + singular.S2.values + singular.S3.values
    )
    regular = eval_regular(d0, w0, D, dR, vR, 0.1, 0.05)
    assert regular.total.values.shape == grid.shape + (3,)


def _residual_at(h, grid, x, tangent_of):
    eps, t_mid = 0.1, 0.05
    theta0, theta1 = {1: 0.5}, {1: 0.2}
    d_in = lift_to_equator(0.5 * np.sin(x), grid)
    dtilde = VectorField(grid=grid, values=(0.2 * np.sin(x))[:, None] * tangent_of(0.5 * np.sin(x)))
    D = compute_D(d_in, dtilde)
    states = []
    for k in (-1, 0, 1):
        t = t_mid + k * h
        theta, theta_t = exact_equator_solution(grid, theta0, theta1, eps, t)
        wave = _wave_state(grid, theta, theta_t, eps, t, tangent_of)
        states.append(extract_remainder(wave, _heat_state(grid, x, 0.5, t), D))
    return remainder_residual(states, _heat_state(grid, x, 0.5, t_mid), D)


def test_remainder_residual_converges_with_probe_spacing(grid32, x32, tangent_of):
    coarse = _residual_at(1e-3, grid32, x32, tangent_of)
    fine = _residual_at(5e-4, grid32, x32, tangent_of)
    assert 3.5 <= coarse / fine <= 4.5


def test_remainder_residual_input_checks(equator_data):
    d_in, dtilde, _, _ = equator_data
    D = compute_D(d_in, dtilde)
    zero = VectorField(grid=d_in.grid, values=np.zeros(d_in.values.shape))

    def rem(t):
        return RemainderState(t=t, eps=0.1, dR=zero, vR=zero)

    heat = HeatFlowState(t=0.1, d0=d_in)
    with pytest.raises(InsufficientSnapshotsError):
        remainder_residual([rem(0.0), rem(0.1)], heat, D)
    with pytest.raises(InsufficientSnapshotsError):
        remainder_residual([rem(0.0), rem(0.1), rem(0.3)], heat, D)
    with pytest.raises(TimeMismatchError):
        remainder_residual([rem(0.0), rem(0.1), rem(0.2)], HeatFlowState(t=0.0, d0=d_in), D)


def test_fit_C_and_running_fit():
    times = np.array([0.0, 1.0, 2.0])
    E = np.array([1.0, 2.0, 3.0])
    F = np.zeros(3)
    assert fit_C_arrays(times, E, F, 0.1) == pytest.approx(1.0 / (2.0 * 1.1))
    np.testing.assert_allclose(fit_C_running(times, E, F, 0.1), [0.0, 1 / 2.2, 1 / 2.2])
    # decreasing energy clamps at zero
    assert fit_C_arrays(times, E[::-1], F, 0.1) == 0.0
    with pytest.raises(TraceTooShortError):
        fit_C_arrays(times[:2], E[:2], F[:2], 0.1)


def test_gronwall_check_flags_excess():
    times = np.linspace(0.0, 1.0, 11)
    M, C, eps = 3.0, 1.0, 0.05
    ok = gronwall_check(times, np.full(11, M), M, C, eps, 1.0)
    assert ok.envelope_ok and ok.bound_ok
    assert ok.samples_checked == 11
    assert ok.max_envelope_ratio < 1.0

    bad = gronwall_check(times, np.full(11, 100.0), M, C, eps, 1.0)
    assert not bad.envelope_ok
    assert bad.max_envelope_ratio > 1.0


def test_M_value_of_single_mode(grid32, x32):
    # D = (b sin x, 0, 0): |D|_{H^2}^2 = 9 pi b^2 and |grad D|_{H^2}^2 = 9 pi b^2
    b = 0.2
    D = VectorField(grid=grid32, values=np.stack([b * np.sin(x32), 0 * x32, 0 * x32], axis=-1))
    assert M_value(D) == pytest.approx(27 * math.pi * b**2, rel=1e-12)
    assert isinstance(lift_to_equator(0 * x32, grid32), DirectorField)
