"""Damped wave map eps d_tt + d_t = Laplace d + (|grad d|^2 - eps |d_t|^2) d into S^2.

Written as the first-order system d' = v, eps v' = -v + Laplace d + lambda d.
The linear part is propagated exactly per Fourier mode with the closed-form
damped-mode solution; the forcing lambda d / eps enters the v equation through
a second-order exponential Runge-Kutta rule (ETD2RK). After each step d is
renormalised and v projected onto the tangent space of the new d.
"""

import logging
import math
from collections.abc import Iterable
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import expm

from .config import settings
from .errors import CompatibilityError, DivergedError, EpsilonRangeError
from .geometry import (
    DirectorField,
    TangentField,
    dot,
    norm_violation,
    normalize_array,
    orthogonality_violation,
    tangent_array,
)
from .grid_spectral import (
    FloatArray,
    ScalarField,
    SpectralGrid,
    VectorField,
    dealias_mask,
    expand_modes,
    forward,
    gradient_array,
    inverse,
    k_squared,
    laplacian_array,
    order_norms,
    require_same_grid,
)
from .heat_flow import grad_contract
from .models import EnergyTrace
from .scalar_oracle import propagator

logger = logging.getLogger(__name__)

WAVE_TRACE_HEADER = (
    "t",
    "W",
    "dissipated",
    "balance_defect",
    "unit_violation",
    "tangency_violation",
)


class WaveMapState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    step: int = 0
    eps: float
    d: DirectorField
    v: VectorField


class WaveRun(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eps: float
    trajectory: list[WaveMapState]
    trace: EnergyTrace
    final: WaveMapState


def check_eps(eps: float) -> None:
    if not 0.0 < eps < 0.5:
        raise EpsilonRangeError(eps)


def check_compatibility(d_in: FloatArray, dtilde_in: FloatArray) -> float:
    violation = orthogonality_violation(d_in, dtilde_in)
    if violation > settings.COMPATIBILITY_TOLERANCE:
        raise CompatibilityError(violation, settings.COMPATIBILITY_TOLERANCE)
    return violation


# --- Multiplier, residual and energy ---


def wave_lambda_array(grid: SpectralGrid, d: FloatArray, v: FloatArray, eps: float) -> FloatArray:
    g = gradient_array(grid, d)
    return grad_contract(g, g) - eps * dot(v, v)


def wave_rhs_lambda(d: DirectorField, v: VectorField, eps: float) -> ScalarField:
    """Pointwise |grad d|^2 - eps |v|^2."""
    require_same_grid(d, v)
    return ScalarField(grid=d.grid, values=wave_lambda_array(d.grid, d.values, v.values, eps))


def wave_residual(d: DirectorField, v: VectorField, acceleration: VectorField, eps: float) -> VectorField:
    """eps d_tt + d_t - Laplace d - lambda d for a given (d, d_t, d_tt)."""
    grid = require_same_grid(d, v, acceleration)
    lam = wave_lambda_array(grid, d.values, v.values, eps)
    values = (
        eps * acceleration.values
        + v.values
        - laplacian_array(grid, d.values)
        - lam[..., np.newaxis] * d.values
    )
    return VectorField(grid=grid, values=values)


def _energy(grid: SpectralGrid, d: FloatArray, v: FloatArray, eps: float) -> float:
    kinetic = order_norms(grid, v, 0)[0] ** 2
    dirichlet = order_norms(grid, d, 1)[1] ** 2
    return 0.5 * eps * kinetic + 0.5 * dirichlet


def wave_energy(state: WaveMapState) -> float:
    """W = eps/2 |d_t|^2 + 1/2 |grad d|^2 (L2 norms)."""
    return _energy(state.d.grid, state.d.values, state.v.values, state.eps)


# --- Integrator ---


class _ModeWeights(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray
    phi1_d: np.ndarray
    phi1_v: np.ndarray
    phi2_d: np.ndarray
    phi2_v: np.ndarray


@lru_cache(maxsize=32)
def _mode_weights(grid: SpectralGrid, eps: float, dt: float) -> _ModeWeights:
    """Exact propagator and dt*phi_{1,2}(dt A) e_2 for every distinct |k|^2."""
    k2 = k_squared(grid)
    unique, inverse_idx = np.unique(k2, return_inverse=True)
    p11, p12, p21, p22 = propagator(unique, eps, dt)

    # exp of [[dt A, e2, 0], [0, 0, 1], [0, 0, 0]] carries phi1(dt A) e2 and phi2(dt A) e2
    aug = np.zeros((unique.size, 4, 4))
    aug[:, 0, 1] = dt
    aug[:, 1, 0] = -dt * unique / eps
    aug[:, 1, 1] = -dt / eps
    aug[:, 1, 2] = 1.0
    aug[:, 2, 3] = 1.0
    blocks = expm(aug)
    phi1 = dt * blocks[:, :2, 2]
    phi2 = dt * blocks[:, :2, 3]

    def spread(values: np.ndarray) -> np.ndarray:
        return expand_modes(values[inverse_idx].reshape(grid.spectral_shape), 1)

    logger.debug("wave mode weights eps=%g dt=%g distinct_k2=%d", eps, dt, unique.size)
    return _ModeWeights(
        p11=spread(p11),
        p12=spread(p12),
        p21=spread(p21),
        p22=spread(p22),
        phi1_d=spread(phi1[:, 0]),
        phi1_v=spread(phi1[:, 1]),
        phi2_d=spread(phi2[:, 0]),
        phi2_v=spread(phi2[:, 1]),
    )


def _forcing_hat(grid: SpectralGrid, d: FloatArray, v: FloatArray, eps: float) -> np.ndarray:
    lam = wave_lambda_array(grid, d, v, eps)
    spectrum = forward(grid, lam[..., np.newaxis] * d / eps)
    if settings.DEALIAS:
        spectrum = spectrum * expand_modes(dealias_mask(grid), 1)
    return spectrum


def wave_step_array(
    grid: SpectralGrid, d: FloatArray, v: FloatArray, eps: float, dt: float
) -> tuple[FloatArray, FloatArray]:
    w = _mode_weights(grid, eps, dt)
    d_hat = forward(grid, d)
    v_hat = forward(grid, v)
    f0 = _forcing_hat(grid, d, v, eps)

    a_d = w.p11 * d_hat + w.p12 * v_hat + w.phi1_d * f0
    a_v = w.p21 * d_hat + w.p22 * v_hat + w.phi1_v * f0
    f1 = _forcing_hat(grid, inverse(grid, a_d), inverse(grid, a_v), eps)

    delta = f1 - f0
    d_new = normalize_array(inverse(grid, a_d + w.phi2_d * delta))
    v_new = tangent_array(d_new, inverse(grid, a_v + w.phi2_v * delta))
    return d_new, v_new


def wave_step(state: WaveMapState, dt: float) -> WaveMapState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.d.grid
    d, v = wave_step_array(grid, state.d.values, state.v.values, state.eps, dt)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(v))):
        raise DivergedError(state.t + dt, "wave_map")
    director = DirectorField(grid=grid, values=d)
    return WaveMapState(
        t=state.t + dt,
        step=state.step + 1,
        eps=state.eps,
        d=director,
        v=TangentField(grid=grid, values=v, anchor=director),
    )


def wave_solve(
    d_in: DirectorField,
    dtilde_in: VectorField,
    eps: float,
    t_final: float,
    dt: float,
    stride: int = 1,
    sample_steps: Iterable[int] = (),
) -> WaveRun:
    """Run the damped wave map; trace every sample with the energy balance.

    balance_defect = W(t) - W(0) + int_0^t |d_t|^2 ds, the integral by the midpoint rule.
    """
    check_eps(eps)
    if not dt > 0 or not t_final > 0:
        raise ValueError("dt and t_final must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    grid = require_same_grid(d_in, dtilde_in)
    check_compatibility(d_in.values, dtilde_in.values)

    nsteps = max(1, math.ceil(t_final / dt - 1e-9))
    wanted = {s for s in sample_steps if 0 <= s <= nsteps}
    d = np.array(d_in.values)
    v = np.array(dtilde_in.values)
    w0 = _energy(grid, d, v, eps)
    dissipated = 0.0

    def row(t: float, d: FloatArray, v: FloatArray) -> tuple[float, ...]:
        energy = _energy(grid, d, v, eps)
        return (
            t,
            energy,
            dissipated,
            energy - w0 + dissipated,
            norm_violation(d),
            orthogonality_violation(d, v),
        )

    trajectory = [WaveMapState(t=0.0, step=0, eps=eps, d=d_in, v=dtilde_in)]
    rows = [row(0.0, d, v)]
    logger.info("wave run start eps=%g n=%s dt=%g steps=%d", eps, grid.n, dt, nsteps)

    for step in range(1, nsteps + 1):
        t = step * dt
        d_next, v_next = wave_step_array(grid, d, v, eps, dt)
        if not (np.all(np.isfinite(d_next)) and np.all(np.isfinite(v_next))):
            logger.warning("wave run diverged eps=%g t=%.6g step=%d", eps, t, step)
            raise DivergedError(t, "wave_map")
        dissipated += dt * order_norms(grid, 0.5 * (v + v_next), 0)[0] ** 2
        d, v = d_next, v_next
        if step % stride == 0 or step in wanted or step == nsteps:
            director = DirectorField(grid=grid, values=d)
            trajectory.append(
                WaveMapState(
                    t=t,
                    step=step,
                    eps=eps,
                    d=director,
                    v=TangentField(grid=grid, values=v, anchor=director),
                )
            )
            rows.append(row(t, d, v))
            if rows[-1][4] > settings.UNIT_TOLERANCE or rows[-1][5] > settings.TANGENCY_TOLERANCE:
                logger.warning(
                    "wave constraint drift eps=%g t=%.6g unit=%.3e tangency=%.3e",
                    eps,
                    t,
                    rows[-1][4],
                    rows[-1][5],
                )

    trace = EnergyTrace(header=WAVE_TRACE_HEADER, rows=rows)
    logger.info(
        "wave run done eps=%g samples=%d balance_defect=%.3e",
        eps,
        len(trajectory),
        rows[-1][3],
    )
    return WaveRun(eps=eps, trajectory=trajectory, trace=trace, final=trajectory[-1])
