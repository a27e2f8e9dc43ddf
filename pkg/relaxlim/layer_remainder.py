"""Initial layer, remainder extraction, remainder-equation terms and energy bounds.

The ansatz is d_eps = d0 + d_layer + sqrt(eps) d_R with the layer
d_layer = -eps D e^{-t/eps} and D = dtilde_in - heat_rhs(d_in). The remainder
obeys d_R'' + (1/eps) d_R' - (1/eps) Laplace d_R = S + R, where S collects the
terms singular in eps and R the regular ones.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydField

from .config import settings
from .errors import (
    BoundUndefinedError,
    EpsilonRangeError,
    InsufficientSnapshotsError,
    TimeMismatchError,
    TraceTooShortError,
)
from .geometry import DirectorField, dot, orthogonality_violation
from .grid_spectral import (
    FloatArray,
    SpectralGrid,
    VectorField,
    gradient_array,
    laplacian_array,
    order_norms,
    require_same_grid,
    sobolev_norm_array,
)
from .heat_flow import (
    HeatFlowState,
    grad_contract,
    heat_rhs_array,
    heat_second_time_derivative_array,
)
from .models import EnergyTrace
from .wave_map import WaveMapState, check_compatibility, check_eps

logger = logging.getLogger(__name__)

REMAINDER_TRACE_HEADER = (
    "t",
    "E_eps",
    "F_eps",
    "h2_dR",
    "h3_dR",
    "h2_vR",
    "residual",
    "C_fit_running",
    "bound_value",
)


class LayerData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    D: VectorField
    eps: float

    def value(self, t: float) -> VectorField:
        return layer_eval(self.D, self.eps, t)

    def velocity(self, t: float) -> VectorField:
        return layer_time_derivative(self.D, self.eps, t)


class RemainderState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    eps: float
    dR: VectorField
    vR: VectorField


class EnergyPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    E: float = PydField(ge=0)
    F: float = PydField(ge=0)


class SingularTerms(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    S1: VectorField
    S2: VectorField
    S3: VectorField
    total: VectorField


class RegularTerms(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    R1: VectorField
    R2: VectorField
    R3: VectorField
    R4: VectorField
    total: VectorField


class GronwallReport(BaseModel):
    """Sampled E against the closed-form curves on t < T_eff."""

    model_config = ConfigDict(frozen=True)

    samples_checked: int
    T_eff: float
    envelope_ok: bool
    bound_ok: bool
    max_envelope_ratio: float
    max_bound_ratio: float


# --- Layer ---


def compute_D(d_in: DirectorField, dtilde_in: VectorField) -> VectorField:
    """D = dtilde_in - Laplace d_in - |grad d_in|^2 d_in."""
    grid = require_same_grid(d_in, dtilde_in)
    check_compatibility(d_in.values, dtilde_in.values)
    return VectorField(grid=grid, values=dtilde_in.values - heat_rhs_array(grid, d_in.values))


def d_tangency_violation(d_in: DirectorField, D: VectorField) -> float:
    """max |d_in . D|; zero in exact arithmetic for unit d_in and tangent dtilde_in."""
    violation = orthogonality_violation(d_in.values, D.values)
    if violation > settings.TANGENCY_TOLERANCE:
        logger.warning("layer data not tangent max_violation=%.3e", violation)
    return violation


def layer_eval(D: VectorField, eps: float, t: float) -> VectorField:
    return VectorField(grid=D.grid, values=-eps * math.exp(-t / eps) * D.values)


def layer_time_derivative(D: VectorField, eps: float, t: float) -> VectorField:
    return VectorField(grid=D.grid, values=math.exp(-t / eps) * D.values)


# --- Remainder ---


def extract_remainder(
    wave_state: WaveMapState, heat_state: HeatFlowState, D: VectorField
) -> RemainderState:
    """d_R = (d_eps - d0 - layer)/sqrt(eps), v_R = (v_eps - heat_rhs(d0) - D e^{-t/eps})/sqrt(eps)."""
    grid = require_same_grid(wave_state.d, heat_state.d0, D)
    t = wave_state.t
    if abs(t - heat_state.t) > 1e-12 * max(1.0, abs(t)):
        raise TimeMismatchError(
            "wave and heat states are at different times", {"wave_t": t, "heat_t": heat_state.t}
        )
    eps = wave_state.eps
    root = math.sqrt(eps)
    decay = math.exp(-t / eps)
    d0 = heat_state.d0.values
    w0 = heat_rhs_array(grid, d0)
    dR = (wave_state.d.values - d0 + eps * decay * D.values) / root
    vR = (wave_state.v.values - w0 - decay * D.values) / root
    return RemainderState(
        t=t,
        eps=eps,
        dR=VectorField(grid=grid, values=dR),
        vR=VectorField(grid=grid, values=vR),
    )


def _h2_squares(rem: RemainderState) -> tuple[float, float, float, float]:
    grid = rem.dR.grid
    dR = rem.dR.values
    vR = rem.vR.values
    return (
        sobolev_norm_array(grid, vR, 2) ** 2,
        sobolev_norm_array(grid, dR, 2) ** 2,
        sobolev_norm_array(grid, dR, 3, homogeneous=True) ** 2,
        sobolev_norm_array(grid, vR + dR, 2) ** 2,
    )


def energy_E(remainder: RemainderState) -> float:
    """|v_R|^2 + (1/eps - 1)|d_R|^2 + (2/eps)|grad d_R|^2 + |v_R + d_R|^2, all in H^2."""
    eps = remainder.eps
    check_eps(eps)
    v2, d2, g2, s2 = _h2_squares(remainder)
    return v2 + (1.0 / eps - 1.0) * d2 + (2.0 / eps) * g2 + s2


def energy_F(remainder: RemainderState) -> float:
    """(1/eps - 1/2)|v_R|^2 + (1/(2 eps))|grad d_R|^2, in H^2."""
    eps = remainder.eps
    check_eps(eps)
    v2, _, g2, _ = _h2_squares(remainder)
    return (1.0 / eps - 0.5) * v2 + (0.5 / eps) * g2


def energy_pair(remainder: RemainderState) -> EnergyPair:
    eps = remainder.eps
    check_eps(eps)
    v2, d2, g2, s2 = _h2_squares(remainder)
    return EnergyPair(
        E=v2 + (1.0 / eps - 1.0) * d2 + (2.0 / eps) * g2 + s2,
        F=(1.0 / eps - 0.5) * v2 + (0.5 / eps) * g2,
    )


def remainder_bound_quantity(remainder: RemainderState) -> float:
    """|v_R|_{H^2}^2 + (1/eps)|d_R|_{H^3}^2, the quantity the closed-form bound controls."""
    grid = remainder.dR.grid
    return (
        sobolev_norm_array(grid, remainder.vR.values, 2) ** 2
        + sobolev_norm_array(grid, remainder.dR.values, 3) ** 2 / remainder.eps
    )


# --- Closed-form bounds ---


def M_value(D: VectorField) -> float:
    """|D|_{H^2}^2 + 2 |grad D|_{H^2}^2."""
    grid = D.grid
    return (
        sobolev_norm_array(grid, D.values, 2) ** 2
        + 2.0 * sobolev_norm_array(grid, D.values, 3, homogeneous=True) ** 2
    )


def _check_bound_args(M: float, C: float) -> None:
    if M < 0 or C < 0:
        raise ValueError("M and C must be nonnegative")


def _denominator(M: float, C: float, eps: float, t: float) -> float:
    try:
        growth = math.exp(C * t)
    except OverflowError:
        return -math.inf
    return 1.0 + eps * M - eps * (1.0 + M) * growth


def bound_curve(M: float, C: float, eps: float, t: float) -> float:
    """2 M e^{Ct} / (1 + eps M - eps (1+M) e^{Ct}); undefined once the denominator reaches 0."""
    _check_bound_args(M, C)
    check_eps(eps)
    den = _denominator(M, C, eps, t)
    if den <= 0:
        raise BoundUndefinedError("bound is undefined for t >= T_eps", {"M": M, "C": C, "eps": eps, "t": t})
    return 2.0 * M * math.exp(C * t) / den


def energy_envelope(M: float, C: float, eps: float, t: float) -> float:
    """(1+M) e^{Ct} / (1 + eps M - eps (1+M) e^{Ct}), the envelope for E_eps itself."""
    _check_bound_args(M, C)
    check_eps(eps)
    den = _denominator(M, C, eps, t)
    if den <= 0:
        raise BoundUndefinedError("envelope is undefined for t >= T_eps", {"M": M, "C": C, "eps": eps, "t": t})
    return (1.0 + M) * math.exp(C * t) / den


def epsilon0(M: float, C: float, T: float) -> float:
    """min{1/2, 1/((1+M) e^{CT} - M)}."""
    _check_bound_args(M, C)
    try:
        denom = (1.0 + M) * math.exp(C * T) - M
    except OverflowError:
        return 0.0
    return min(0.5, 1.0 / denom)


def T_eps(M: float, C: float, T: float, eps: float) -> float:
    """min{T, ln((1 + eps M)/(eps (1+M)))/C}; exactly T for every eps <= epsilon0."""
    _check_bound_args(M, C)
    check_eps(eps)
    if eps <= epsilon0(M, C, T) or C == 0:
        return T
    return min(T, math.log((1.0 + eps * M) / (eps * (1.0 + M))) / C)


def c0_surrogate(M: float, C: float, eps0: float, T: float) -> float:
    """bound_curve at (eps0, T); infinite when the denominator vanishes there."""
    _check_bound_args(M, C)
    den = _denominator(M, C, eps0, T)
    if den <= 1e-12 * (1.0 + eps0 * M):
        return math.inf
    return 2.0 * M * math.exp(C * T) / den


# --- Remainder equation terms ---


def _col(scalar: FloatArray) -> FloatArray:
    return scalar[..., np.newaxis]


def _singular_arrays(
    grid: SpectralGrid,
    d0: FloatArray,
    w0: FloatArray,
    w00: FloatArray,
    D: FloatArray,
    dR: FloatArray,
    vR: FloatArray,
    eps: float,
    t: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    a = math.exp(-t / eps)
    s = math.sqrt(eps)
    g0 = gradient_array(grid, d0)
    gD = gradient_array(grid, D)
    gR = gradient_array(grid, dR)
    W = w0 + a * D
    G00 = grad_contract(g0, g0)
    G0D = grad_contract(g0, gD)
    G0R = grad_contract(g0, gR)
    GRR = grad_contract(gR, gR)

    S1 = -(1.0 / s) * (
        w00
        + a * laplacian_array(grid, D)
        + _col(dot(W, W)) * d0
        + a * _col(G00) * D
        + 2.0 * a * _col(G0D) * d0
    )
    S2 = (1.0 / s) * (2.0 * _col(G0R) * dR + _col(GRR) * d0)
    S3 = (1.0 / eps) * (_col(G00) * dR + 2.0 * _col(G0R) * d0)
    return S1, S2, S3


def _regular_arrays(
    grid: SpectralGrid,
    d0: FloatArray,
    w0: FloatArray,
    D: FloatArray,
    dR: FloatArray,
    vR: FloatArray,
    eps: float,
    t: float,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    a = math.exp(-t / eps)
    s = math.sqrt(eps)
    s3 = eps * s
    g0 = gradient_array(grid, d0)
    gD = gradient_array(grid, D)
    gR = gradient_array(grid, dR)
    W = w0 + a * D
    W2 = _col(dot(W, W))
    WvR = _col(dot(W, vR))
    vR2 = _col(dot(vR, vR))
    G0D = _col(grad_contract(g0, gD))
    G0R = _col(grad_contract(g0, gR))
    GDD = _col(grad_contract(gD, gD))
    GDR = _col(grad_contract(gD, gR))
    GRR = _col(grad_contract(gR, gR))

    R1 = s * W2 * a * D + s * GDD * a**2 * d0 - s3 * GDD * a**3 * D + 2.0 * s * G0D * a**2 * D
    R2 = (
        -2.0 * WvR * d0
        - W2 * dR
        + 2.0 * eps * WvR * a * D
        + eps * GDD * a**2 * dR
        - 2.0 * G0D * a * dR
        - 2.0 * G0R * a * D
        - 2.0 * GDR * a * d0
        + 2.0 * eps * GDR * a**2 * D
    )
    R3 = (
        s3 * a * vR2 * D
        - 2.0 * s * WvR * dR
        - s * vR2 * d0
        - 2.0 * s * GDR * a * dR
        - s * GRR * a * D
    )
    R4 = -eps * vR2 * dR + GRR * dR
    return R1, R2, R3, R4


def eval_singular(
    d0: VectorField,
    w0: VectorField,
    w00: VectorField,
    D: VectorField,
    dR: VectorField,
    vR: VectorField,
    eps: float,
    t: float,
) -> SingularTerms:
    grid = require_same_grid(d0, w0, w00, D, dR, vR)
    check_eps(eps)
    S1, S2, S3 = _singular_arrays(
        grid, d0.values, w0.values, w00.values, D.values, dR.values, vR.values, eps, t
    )
    return SingularTerms(
        S1=VectorField(grid=grid, values=S1),
        S2=VectorField(grid=grid, values=S2),
        S3=VectorField(grid=grid, values=S3),
        total=VectorField(grid=grid, values=S1 + S2 + S3),
    )


def eval_regular(
    d0: VectorField,
    w0: VectorField,
    D: VectorField,
    dR: VectorField,
    vR: VectorField,
    eps: float,
    t: float,
) -> RegularTerms:
    grid = require_same_grid(d0, w0, D, dR, vR)
    check_eps(eps)
    R1, R2, R3, R4 = _regular_arrays(
        grid, d0.values, w0.values, D.values, dR.values, vR.values, eps, t
    )
    return RegularTerms(
        R1=VectorField(grid=grid, values=R1),
        R2=VectorField(grid=grid, values=R2),
        R3=VectorField(grid=grid, values=R3),
        R4=VectorField(grid=grid, values=R4),
        total=VectorField(grid=grid, values=R1 + R2 + R3 + R4),
    )


def _oracle_array(
    grid: SpectralGrid,
    d0: FloatArray,
    w0: FloatArray,
    w00: FloatArray,
    D: FloatArray,
    dR: FloatArray,
    vR: FloatArray,
    eps: float,
    t: float,
) -> FloatArray:
    a = math.exp(-t / eps)
    s = math.sqrt(eps)
    d = d0 - eps * a * D + s * dR
    d_t = w0 + a * D + s * vR
    gd = gradient_array(grid, d)
    g0 = gradient_array(grid, d0)
    lam = grad_contract(gd, gd) - eps * dot(d_t, d_t)
    residual = (
        _col(lam) * d
        - eps * w00
        - _col(grad_contract(g0, g0)) * d0
        - eps * a * laplacian_array(grid, D)
    )
    return residual / (eps * s)


def decomposition_oracle(
    d0: VectorField,
    w0: VectorField,
    w00: VectorField,
    D: VectorField,
    dR: VectorField,
    vR: VectorField,
    eps: float,
    t: float,
) -> VectorField:
    """eps^{-3/2} [N(d) - eps w00 - |grad d0|^2 d0 - eps e^{-t/eps} Laplace D] on the assembled ansatz.

    N(d) = (|grad d|^2 - eps |d_t|^2) d with d and d_t built from the inputs;
    this must equal S + R for arbitrary smooth inputs.
    """
    grid = require_same_grid(d0, w0, w00, D, dR, vR)
    check_eps(eps)
    values = _oracle_array(
        grid, d0.values, w0.values, w00.values, D.values, dR.values, vR.values, eps, t
    )
    return VectorField(grid=grid, values=values)


def decomposition_deviation(
    d0: VectorField,
    w0: VectorField,
    w00: VectorField,
    D: VectorField,
    dR: VectorField,
    vR: VectorField,
    eps: float,
    t: float,
) -> float:
    """max |S + R - oracle| / max |oracle| (0 when both vanish)."""
    S = eval_singular(d0, w0, w00, D, dR, vR, eps, t).total.values
    R = eval_regular(d0, w0, D, dR, vR, eps, t).total.values
    oracle = decomposition_oracle(d0, w0, w00, D, dR, vR, eps, t).values
    scale = float(np.max(np.abs(oracle)))
    gap = float(np.max(np.abs(S + R - oracle)))
    if scale == 0.0:
        return gap
    return gap / scale


def remainder_residual(
    states: Sequence[RemainderState], heat_state: HeatFlowState, D: VectorField
) -> float:
    """L2 norm of d_R'' + (1/eps) v_R - (1/eps) Laplace d_R - S - R at the middle state.

    d_R'' is the centred second difference over three equally spaced states.
    """
    if len(states) != 3:
        raise InsufficientSnapshotsError(
            "need exactly three remainder states", {"count": len(states)}
        )
    before, mid, after = states
    h = mid.t - before.t
    if not h > 0 or abs((after.t - mid.t) - h) > 1e-9 * max(h, 1e-300):
        raise InsufficientSnapshotsError(
            "remainder states must be equally spaced in time",
            {"times": [before.t, mid.t, after.t]},
        )
    if abs(heat_state.t - mid.t) > 1e-12 * max(1.0, abs(mid.t)):
        raise TimeMismatchError(
            "heat state must sit at the middle time", {"heat_t": heat_state.t, "t": mid.t}
        )
    grid = require_same_grid(before.dR, mid.dR, after.dR, heat_state.d0, D)
    eps = mid.eps
    check_eps(eps)
    d0 = heat_state.d0.values
    w0 = heat_rhs_array(grid, d0)
    w00 = heat_second_time_derivative_array(grid, d0)
    dR = mid.dR.values
    vR = mid.vR.values

    dtt = (after.dR.values - 2.0 * dR + before.dR.values) / h**2
    S1, S2, S3 = _singular_arrays(grid, d0, w0, w00, D.values, dR, vR, eps, mid.t)
    R1, R2, R3, R4 = _regular_arrays(grid, d0, w0, D.values, dR, vR, eps, mid.t)
    residual = (
        dtt
        + (vR - laplacian_array(grid, dR)) / eps
        - (S1 + S2 + S3)
        - (R1 + R2 + R3 + R4)
    )
    return order_norms(grid, residual, 0)[0]


# --- Gronwall monitor ---


def _interval_constants(times: FloatArray, E: FloatArray, F: FloatArray, eps: float) -> FloatArray:
    dt = np.diff(times)
    if np.any(dt <= 0):
        raise ValueError("trace times must be strictly increasing")
    rate = np.diff(E) / dt + 3.0 * F[:-1]
    return rate / ((1.0 + E[:-1]) * (1.0 + eps * E[:-1]))


def fit_C_arrays(times: FloatArray, E: FloatArray, F: FloatArray, eps: float) -> float:
    if len(times) < 3:
        raise TraceTooShortError("fit_C needs at least three samples", {"samples": len(times)})
    return max(0.0, float(np.max(_interval_constants(times, E, F, eps))))


def fit_C(trace: EnergyTrace, eps: float) -> float:
    """Smallest C >= 0 with (E_{i+1} - E_i)/dt_i + 3 F_i <= C (1 + E_i)(1 + eps E_i) on the trace."""
    return fit_C_arrays(trace.times, trace.column("E_eps"), trace.column("F_eps"), eps)


def fit_C_running(times: FloatArray, E: FloatArray, F: FloatArray, eps: float) -> FloatArray:
    """C_fit over the samples up to each index (0 before two samples exist)."""
    out = np.zeros(len(times))
    if len(times) >= 2:
        consts = np.maximum(_interval_constants(times, E, F, eps), 0.0)
        out[1:] = np.maximum.accumulate(consts)
    return out


def gronwall_check(
    times: FloatArray, E: FloatArray, M: float, C: float, eps: float, T: float
) -> GronwallReport:
    """Compare sampled E with energy_envelope and bound_curve on t < T_eff."""
    t_eff = T_eps(M, C, T, eps)
    slack = 1e-9
    env_ratio = 0.0
    bound_ratio = 0.0
    env_ok = True
    bound_ok = True
    checked = 0
    for t, e in zip(times, E, strict=True):
        if t > t_eff or _denominator(M, C, eps, float(t)) <= 0:
            continue
        checked += 1
        envelope = energy_envelope(M, C, eps, float(t))
        bound = bound_curve(M, C, eps, float(t))
        env_ratio = max(env_ratio, e / envelope)
        env_ok = env_ok and e <= envelope * (1.0 + slack) + 1e-12
        if bound > 0:
            bound_ratio = max(bound_ratio, e / bound)
        bound_ok = bound_ok and e <= bound * (1.0 + slack) + 1e-12
    if not env_ok:
        logger.warning("gronwall envelope exceeded eps=%g max_ratio=%.6g", eps, env_ratio)
    elif not bound_ok:
        logger.info("bound curve below E eps=%g M=%.6g max_ratio=%.6g", eps, M, bound_ratio)
    return GronwallReport(
        samples_checked=checked,
        T_eff=t_eff,
        envelope_ok=env_ok,
        bound_ok=bound_ok,
        max_envelope_ratio=env_ratio,
        max_bound_ratio=bound_ratio,
    )
