"""Harmonic-map heat flow d_t = Laplace d + |grad d|^2 d into S^2.

Time stepping: the Laplacian is integrated exactly per Fourier mode
(integrating factor), the nonlinearity by an explicit midpoint stage, and the
result is renormalised onto the sphere after every step.
"""

import logging
import math
from collections.abc import Iterable
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import settings
from .errors import DivergedError
from .geometry import DirectorField, normalize_array, norm_violation
from .grid_spectral import (
    FloatArray,
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
)
from .models import EnergyTrace

logger = logging.getLogger(__name__)

HEAT_TRACE_HEADER = ("t", "dirichlet_energy", "h1", "h2", "h3", "unit_violation")


class HeatFlowState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    step: int = 0
    d0: DirectorField


class HeatRun(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trajectory: list[HeatFlowState]
    trace: EnergyTrace
    max_energy_increase: float
    final: HeatFlowState

    def at_step(self, step: int) -> HeatFlowState:
        for state in self.trajectory:
            if state.step == step:
                return state
        raise KeyError(f"step {step} was not sampled")


# --- Right-hand sides ---


def grad_contract(ga: FloatArray, gb: FloatArray) -> FloatArray:
    """sum_{c,i} d_i a_c d_i b_c for gradient arrays shaped (..., 3, dim)."""
    return np.einsum("...ci,...ci->...", ga, gb)


def heat_rhs_array(grid: SpectralGrid, d: FloatArray) -> FloatArray:
    g = gradient_array(grid, d)
    return laplacian_array(grid, d) + grad_contract(g, g)[..., np.newaxis] * d


def heat_second_time_derivative_array(grid: SpectralGrid, d: FloatArray) -> FloatArray:
    w = heat_rhs_array(grid, d)
    gd = gradient_array(grid, d)
    gw = gradient_array(grid, w)
    return (
        laplacian_array(grid, w)
        + 2.0 * grad_contract(gd, gw)[..., np.newaxis] * d
        + grad_contract(gd, gd)[..., np.newaxis] * w
    )


def heat_rhs(d0: DirectorField) -> VectorField:
    """Laplace d0 + |grad d0|^2 d0, which is d0_t along the flow."""
    return VectorField(grid=d0.grid, values=heat_rhs_array(d0.grid, d0.values))


def heat_second_time_derivative(d0: DirectorField) -> VectorField:
    """d0_tt from differentiating the equation: Lap w + 2 (grad d0 : grad w) d0 + |grad d0|^2 w."""
    return VectorField(grid=d0.grid, values=heat_second_time_derivative_array(d0.grid, d0.values))


def dirichlet_energy_array(grid: SpectralGrid, d: FloatArray) -> float:
    return 0.5 * order_norms(grid, d, 1)[1] ** 2


def harmonic_energy(d: DirectorField) -> float:
    """E(d) = 1/2 int |grad d|^2."""
    return dirichlet_energy_array(d.grid, d.values)


# --- Integrator ---


@lru_cache(maxsize=16)
def _factors(grid: SpectralGrid, dt: float) -> tuple[FloatArray, FloatArray]:
    k2 = expand_modes(k_squared(grid), 1)
    return np.exp(-k2 * dt), np.exp(-k2 * 0.5 * dt)


def _nonlinear_hat(grid: SpectralGrid, d: FloatArray) -> np.ndarray:
    g = gradient_array(grid, d)
    spectrum = forward(grid, grad_contract(g, g)[..., np.newaxis] * d)
    if settings.DEALIAS:
        spectrum = spectrum * expand_modes(dealias_mask(grid), 1)
    return spectrum


def heat_step_array(grid: SpectralGrid, d: FloatArray, dt: float) -> FloatArray:
    full, half = _factors(grid, dt)
    d_hat = forward(grid, d)
    n0 = _nonlinear_hat(grid, d)
    d_mid = inverse(grid, half * (d_hat + 0.5 * dt * n0))
    n1 = _nonlinear_hat(grid, d_mid)
    d_new = inverse(grid, full * d_hat + dt * half * n1)
    return normalize_array(d_new)


def heat_step(state: HeatFlowState, dt: float) -> HeatFlowState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.d0.grid
    values = heat_step_array(grid, state.d0.values, dt)
    if not np.all(np.isfinite(values)):
        raise DivergedError(state.t + dt, "heat_flow")
    return HeatFlowState(
        t=state.t + dt, step=state.step + 1, d0=DirectorField(grid=grid, values=values)
    )


def _trace_row(grid: SpectralGrid, t: float, d: FloatArray) -> tuple[float, ...]:
    norms = order_norms(grid, d, 3)
    return (
        t,
        0.5 * norms[1] ** 2,
        norms[1],
        norms[1] + norms[2],
        norms[1] + norms[2] + norms[3],
        norm_violation(d),
    )


def heat_solve(
    d_in: DirectorField,
    t_final: float,
    dt: float,
    stride: int = 1,
    sample_steps: Iterable[int] = (),
) -> HeatRun:
    """Run from d_in to t_final, keeping every `stride`-th state plus `sample_steps`.

    Sampled times are exactly step * dt. Trace norms are homogeneous (h1, h2, h3).
    """
    if not dt > 0 or not t_final > 0:
        raise ValueError("dt and t_final must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    grid = d_in.grid
    nsteps = max(1, math.ceil(t_final / dt - 1e-9))
    wanted = {s for s in sample_steps if 0 <= s <= nsteps}

    d = np.array(d_in.values)
    energy = dirichlet_energy_array(grid, d)
    tolerance = settings.ENERGY_MONOTONE_TOLERANCE * (1.0 + energy)
    max_increase = -math.inf
    trajectory = [HeatFlowState(t=0.0, step=0, d0=d_in)]
    rows = [_trace_row(grid, 0.0, d)]
    logger.info("heat run start n=%s dt=%g steps=%d", grid.n, dt, nsteps)

    for step in range(1, nsteps + 1):
        t = step * dt
        d = heat_step_array(grid, d, dt)
        if not np.all(np.isfinite(d)):
            logger.warning("heat run diverged t=%.6g step=%d", t, step)
            raise DivergedError(t, "heat_flow")
        new_energy = dirichlet_energy_array(grid, d)
        increase = new_energy - energy
        if increase > tolerance:
            logger.warning("dirichlet energy increased t=%.6g delta=%.3e", t, increase)
        max_increase = max(max_increase, increase)
        energy = new_energy
        if step % stride == 0 or step in wanted or step == nsteps:
            trajectory.append(
                HeatFlowState(t=t, step=step, d0=DirectorField(grid=grid, values=d))
            )
            rows.append(_trace_row(grid, t, d))
            if rows[-1][-1] > settings.UNIT_TOLERANCE:
                logger.warning("heat unit drift t=%.6g violation=%.3e", t, rows[-1][-1])
            logger.debug("heat sample t=%.6g energy=%.9g", t, energy)

    logger.info(
        "heat run done steps=%d samples=%d max_energy_increase=%.3e",
        nsteps,
        len(trajectory),
        max_increase,
    )
    return HeatRun(
        trajectory=trajectory,
        trace=EnergyTrace(header=HEAT_TRACE_HEADER, rows=rows),
        max_energy_increase=max_increase,
        final=trajectory[-1],
    )
