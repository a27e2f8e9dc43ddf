"""Exact solutions of the linear scalar damped wave and heat equations.

Each Fourier mode of eps*u_tt + u_t = u_xx obeys eps*g'' + g' + k^2 g = 0.
The closed forms below are vectorised over k^2 and t, and the wave-map solver
builds its per-mode linear propagator from the same formulas.
"""

import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field as PydField

from .errors import RateFitError
from .geometry import DirectorField
from .grid_spectral import FloatArray, ScalarField, SpectralGrid
from .rates import RateFit, rate_fit

logger = logging.getLogger(__name__)

# Above this discriminant the two real roots are far apart and the direct
# two-exponential form is accurate; below it the form centred on -1/(2 eps) is used.
_SEPARATED_DISC = 0.25


class ScalarModeIC(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = PydField(ge=0)
    a: float = 0.0
    b: float = 0.0
    eps: float = PydField(gt=0)


def _mode_terms(
    k2: ArrayLike, a: ArrayLike, b: ArrayLike, eps: float, t: ArrayLike
) -> tuple[FloatArray, FloatArray, FloatArray]:
    k2_, a_, b_, t_ = np.broadcast_arrays(
        np.asarray(k2, dtype=float),
        np.asarray(a, dtype=float),
        np.asarray(b, dtype=float),
        np.asarray(t, dtype=float),
    )
    disc = 1.0 - 4.0 * eps * k2_

    with np.errstate(all="ignore"):
        # k = 0: eps g'' + g' = 0
        decay = np.exp(-t_ / eps)
        g0 = a_ + eps * b_ * (-np.expm1(-t_ / eps))
        v0 = b_ * decay
        acc0 = -(b_ / eps) * decay

        # well separated real roots, heat-like root without cancellation
        s = np.sqrt(np.maximum(disc, 0.0))
        lam_p = -2.0 * k2_ / (1.0 + s)
        lam_m = -(1.0 + s) / (2.0 * eps)
        gap = s / eps
        c_p = (b_ - lam_m * a_) / gap
        c_m = (lam_p * a_ - b_) / gap
        e_p = np.exp(lam_p * t_)
        e_m = np.exp(lam_m * t_)
        g1 = c_p * e_p + c_m * e_m
        v1 = lam_p * c_p * e_p + lam_m * c_m * e_m
        acc1 = lam_p**2 * c_p * e_p + lam_m**2 * c_m * e_m

        # near the double root and in the oscillatory regime
        sigma = -1.0 / (2.0 * eps)
        q = disc / (4.0 * eps**2)
        r = np.sqrt(np.abs(q))
        x = r * t_
        base = np.exp(sigma * t_)
        safe_r = np.where(r > 0, r, 1.0)
        # real branch, split to keep e^{sigma t} cosh(r t) finite for large r t
        up = np.exp((sigma + r) * t_)
        down = np.exp((sigma - r) * t_)
        c_real = np.where(x >= 1.0, 0.5 * (up + down), base * np.cosh(x))
        s_real = np.where(
            x >= 1.0,
            (up - down) / (2.0 * safe_r),
            base * np.where(r > 0, np.sinh(x) / safe_r, t_),
        )
        c_osc = base * np.cos(x)
        s_osc = base * np.where(r > 0, np.sin(x) / safe_r, t_)
        big_c = np.where(q >= 0, c_real, c_osc)
        big_s = np.where(q >= 0, s_real, s_osc)
        p_val = b_ - sigma * a_
        p_vel = -(k2_ * a_ + 0.5 * b_) / eps
        g2 = a_ * big_c + p_val * big_s
        v2 = b_ * big_c + p_vel * big_s
        acc2 = (sigma * b_ + p_vel) * big_c + (sigma * p_vel + b_ * q) * big_s

    conds = [k2_ == 0.0, disc > _SEPARATED_DISC]
    g = np.select(conds, [g0, g1], default=g2)
    v = np.select(conds, [v0, v1], default=v2)
    acc = np.select(conds, [acc0, acc1], default=acc2)
    # initial data exactly; lam_m c_m cancels against lam_p c_p there when eps k^2 is small
    start = t_ == 0.0
    g = np.where(start, a_, g)
    v = np.where(start, b_, v)
    acc = np.where(start, -(b_ + k2_ * a_) / eps, acc)
    return g, v, acc


def damped_mode_values(
    k2: ArrayLike, a: ArrayLike, b: ArrayLike, eps: float, t: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """(g, g') for eps g'' + g' + k2 g = 0 with g(0) = a, g'(0) = b; broadcasts."""
    g, v, _ = _mode_terms(k2, a, b, eps, t)
    return g, v


def damped_mode(ic: ScalarModeIC, t: ArrayLike) -> tuple[FloatArray, FloatArray]:
    return damped_mode_values(ic.k**2, ic.a, ic.b, ic.eps, t)


def damped_mode_acceleration(ic: ScalarModeIC, t: ArrayLike) -> FloatArray:
    """g'' differentiated from the closed form (not taken from the ODE)."""
    return _mode_terms(ic.k**2, ic.a, ic.b, ic.eps, t)[2]


def propagator(
    k2: ArrayLike, eps: float, h: float
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Entries (p11, p12, p21, p22) of exp(h A) for A = [[0, 1], [-k2/eps, -1/eps]]."""
    p11, p21 = damped_mode_values(k2, 1.0, 0.0, eps, h)
    p12, p22 = damped_mode_values(k2, 0.0, 1.0, eps, h)
    return p11, p12, p21, p22


def heat_mode(k: ArrayLike, a: ArrayLike, t: ArrayLike) -> FloatArray:
    return np.asarray(a, dtype=float) * np.exp(-(np.asarray(k, dtype=float) ** 2) * np.asarray(t))


def scalar_layer_mode(k: ArrayLike, a: ArrayLike, b: ArrayLike, eps: float, t: ArrayLike) -> FloatArray:
    """Per-mode initial layer -eps (b + k^2 a) e^{-t/eps}."""
    k2 = np.asarray(k, dtype=float) ** 2
    return -eps * (np.asarray(b) + k2 * np.asarray(a)) * np.exp(-np.asarray(t) / eps)


def scalar_layer_velocity(
    k: ArrayLike, a: ArrayLike, b: ArrayLike, eps: float, t: ArrayLike
) -> FloatArray:
    k2 = np.asarray(k, dtype=float) ** 2
    return (np.asarray(b) + k2 * np.asarray(a)) * np.exp(-np.asarray(t) / eps)


def lift_to_equator(theta: ScalarField | FloatArray, grid: SpectralGrid | None = None) -> DirectorField:
    """(cos theta, sin theta, 0) pointwise."""
    if isinstance(theta, ScalarField):
        grid = theta.grid
        values = theta.scalar
    else:
        if grid is None:
            raise ValueError("a grid is required when lifting a raw array")
        values = np.asarray(theta, dtype=float)
    lifted = np.stack([np.cos(values), np.sin(values), np.zeros_like(values)], axis=-1)
    return DirectorField(grid=grid, values=lifted)


def sine_profile(grid: SpectralGrid, modes: Mapping[int, float], axis: int = 0) -> FloatArray:
    """Sum of modes[k] * sin(k x) (k >= 1) plus modes[0] as a constant, along `axis`."""
    x = grid.coordinates()[axis] * (2.0 * math.pi / grid.lengths[axis])
    out = np.zeros(grid.shape)
    for k, coeff in modes.items():
        out = out + (coeff if k == 0 else coeff * np.sin(k * x))
    return out


def exact_equator_solution(
    grid: SpectralGrid,
    theta0: Mapping[int, float],
    theta1: Mapping[int, float],
    eps: float,
    t: float,
) -> tuple[FloatArray, FloatArray]:
    """theta(t) and theta_t(t) of the linear damped wave with sine-mode data on axis 0."""
    x = grid.coordinates()[0] * (2.0 * math.pi / grid.lengths[0])
    scale = (2.0 * math.pi / grid.lengths[0]) ** 2
    theta = np.zeros(grid.shape)
    theta_t = np.zeros(grid.shape)
    for k in sorted(set(theta0) | set(theta1)):
        g, v = damped_mode_values(k**2 * scale, theta0.get(k, 0.0), theta1.get(k, 0.0), eps, t)
        shape = np.ones(grid.shape) if k == 0 else np.sin(k * x)
        theta = theta + float(g) * shape
        theta_t = theta_t + float(v) * shape
    return theta, theta_t


# --- Scalar limit study ---


class ScalarRatePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float
    err_pos: float
    err_vel: float


class ScalarStudy(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: list[ScalarRatePoint]
    position: RateFit
    velocity: RateFit


def _study_times(eps: float, t_final: float) -> FloatArray:
    uniform = np.linspace(0.0, t_final, 401)
    layer_end = min(10.0 * eps, t_final)
    geometric = np.geomspace(min(1e-3 * eps, layer_end), layer_end, 200)
    return np.union1d(uniform, geometric)


def scalar_limit_study(
    theta0_modes: Mapping[int, float],
    theta1_modes: Mapping[int, float],
    eps_list: Sequence[float],
    t_final: float,
) -> ScalarStudy:
    """sup-in-time L2 errors of (wave - heat - layer) on [0, 2pi), fitted against eps.

    Profiles are sums of sin(k x) with the k = 0 entry read as a constant.
    """
    eps_arr = np.asarray(eps_list, dtype=float)
    if not t_final > 0.0:
        raise RateFitError("t_final must be positive for a rate study", {"t_final": t_final})
    if eps_arr.size < 4 or np.any(np.diff(eps_arr) >= 0) or eps_arr[0] / eps_arr[-1] < 100.0:
        raise RateFitError(
            "eps_list must be strictly decreasing with >= 4 values spanning >= 2 decades",
            {"eps_list": eps_arr.tolist()},
        )
    modes = sorted(set(theta0_modes) | set(theta1_modes))
    k = np.array(modes, dtype=float)[:, np.newaxis]
    a = np.array([theta0_modes.get(m, 0.0) for m in modes])[:, np.newaxis]
    b = np.array([theta1_modes.get(m, 0.0) for m in modes])[:, np.newaxis]
    weights = np.where(k == 0, 2.0 * math.pi, math.pi)

    points = []
    for eps in eps_arr:
        t = _study_times(float(eps), t_final)[np.newaxis, :]
        g, v = damped_mode_values(k**2, a, b, float(eps), t)
        pos = g - heat_mode(k, a, t) - scalar_layer_mode(k, a, b, float(eps), t)
        vel = v + k**2 * heat_mode(k, a, t) - scalar_layer_velocity(k, a, b, float(eps), t)
        err_pos = float(np.max(np.sqrt(np.sum(weights * pos**2, axis=0))))
        err_vel = float(np.max(np.sqrt(np.sum(weights * vel**2, axis=0))))
        points.append(ScalarRatePoint(eps=float(eps), err_pos=err_pos, err_vel=err_vel))
        logger.debug("scalar study eps=%.3g err_pos=%.3e err_vel=%.3e", eps, err_pos, err_vel)

    position = rate_fit((p.eps, p.err_pos) for p in points)
    velocity = rate_fit((p.eps, p.err_vel) for p in points)
    logger.info(
        "scalar study modes=%d slope_pos=%s slope_vel=%s",
        len(modes),
        position.slope,
        velocity.slope,
    )
    return ScalarStudy(points=points, position=position, velocity=velocity)
