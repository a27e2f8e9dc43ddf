"""Experiment orchestration: initial data presets, the eps sweep, reports."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import settings
from .errors import BoundUndefinedError, RateFitError, RelaxlimError
from .geometry import DirectorField, project_to_tangent
from .grid_spectral import (
    SpectralGrid,
    VectorField,
    order_norms,
    random_band_limited_field,
    sobolev_norm_array,
)
from .heat_flow import HeatFlowState, heat_rhs, heat_rhs_array, heat_solve
from .layer_remainder import (
    REMAINDER_TRACE_HEADER,
    GronwallReport,
    M_value,
    T_eps,
    bound_curve,
    c0_surrogate,
    compute_D,
    d_tangency_violation,
    decomposition_deviation,
    energy_pair,
    epsilon0,
    extract_remainder,
    fit_C_arrays,
    fit_C_running,
    gronwall_check,
    remainder_bound_quantity,
    remainder_residual,
)
from .logging_utils import format_kv, setup_logging
from .models import EnergyTrace, ExperimentConfig, InitSection, PhysicsSection
from .rates import RateFit, rate_fit
from .scalar_oracle import ScalarStudy, lift_to_equator, scalar_limit_study, sine_profile
from .store import ensure_dir, format_float, write_field, write_rows, write_trace
from .wave_map import WaveRun, wave_solve

logger = logging.getLogger(__name__)

STUDY_HEADER = ("eps", "sup_pos_err", "sup_vel_err", "sup_E", "M", "C_fit", "eps0", "T_eff", "status")
LAYER_SAMPLES_PER_EPS = 10
GEOMETRIC_SAMPLES = 30
NO_LAYER_WINDOW = 5.0  # control window, in units of eps


class InitialData(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d_in: DirectorField
    dtilde_in: VectorField
    # sine-mode description for the scalar reference (equator preset on [0, 2pi) only)
    theta0_modes: dict[int, float] | None = None
    theta1_modes: dict[int, float] | None = None


class EpsTask(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eps: float
    d_in: DirectorField
    dtilde_in: VectorField
    D: VectorField
    heat: dict[int, np.ndarray]
    t_final: float
    dt: float
    stride: int
    samples: list[int]
    probe_steps: int | None
    probe_centres: list[int]
    diagnostics: bool
    snapshot_dir: Path | None = None


class EpsRun(BaseModel):
    """Outcome of one eps; failed runs keep only eps and status."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eps: float
    status: str
    wave_trace: EnergyTrace | None = None
    times: list[float] = []
    E: list[float] = []
    F: list[float] = []
    h2_dR: list[float] = []
    h3_dR: list[float] = []
    h2_vR: list[float] = []
    residual: list[float] = []
    bound_quantity: list[float] = []
    sup_pos_err: float = math.nan
    sup_vel_err: float = math.nan
    sup_E: float = math.nan
    C_fit: float = math.nan
    no_layer_sup: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class StudyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float
    sup_pos_err: float
    sup_vel_err: float
    sup_E: float
    M: float
    C_fit: float
    eps0: float
    T_eff: float
    status: str
    gronwall: GronwallReport | None = None
    no_layer_ratio: float = math.nan

    def csv_row(self) -> list[object]:
        return [
            self.eps,
            self.sup_pos_err,
            self.sup_vel_err,
            self.sup_E,
            self.M,
            self.C_fit,
            self.eps0,
            self.T_eff,
            self.status,
        ]


class DecompositionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    n: int
    dim: int
    cases: int
    max_deviation: float
    tolerance: float
    worst: dict[str, float]

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


class StudyReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: ExperimentConfig
    T: float
    M: float
    D_l2: float
    d_tangency: float
    C_fit: float
    eps0: float
    c0: float
    c0_below_eps0: float | None
    teps_equals_T: bool
    rows: list[StudyRow]
    runs: list[EpsRun]
    heat_trace: EnergyTrace | None = None
    heat_max_energy_increase: float | None = None
    position_fit: RateFit | None = None
    velocity_fit: RateFit | None = None
    scalar_reference: ScalarStudy | None = None
    decomposition: DecompositionReport | None = None


# --- Initial data ---


def build_grid(config: ExperimentConfig) -> SpectralGrid:
    return SpectralGrid.create(
        n=config.domain.n, dim=config.domain.dim, lengths=config.domain.lengths
    )


def build_initial_data(init: InitSection, grid: SpectralGrid) -> InitialData:
    """Closed-form (d_in, dtilde_in) presets; every preset is compatible by construction."""
    zeros = np.zeros(grid.shape + (3,))
    if init.preset == "constant":
        values = np.zeros(grid.shape + (3,))
        values[..., 2] = 1.0
        d_in = DirectorField(grid=grid, values=values)
        return InitialData(
            d_in=d_in,
            dtilde_in=VectorField(grid=grid, values=zeros),
            theta0_modes={0: 0.0},
            theta1_modes={0: 0.0},
        )

    m = init.wavenumber
    if init.preset == "equator":
        scale = (2.0 * math.pi / grid.lengths[0]) ** 2
        theta0_modes = {m: init.amplitude}
        theta1_modes = {
            "explicit": {m: init.theta1_amplitude},
            "well_prepared": {m: -(m**2) * scale * init.amplitude},
            "zero": {m: 0.0},
        }[init.theta1]
        theta0 = sine_profile(grid, theta0_modes)
        theta1 = sine_profile(grid, theta1_modes)
        d_in = lift_to_equator(theta0, grid)
        tangent = np.stack([-np.sin(theta0), np.cos(theta0), np.zeros_like(theta0)], axis=-1)
        on_circle = math.isclose(grid.lengths[0], 2.0 * math.pi)
        return InitialData(
            d_in=d_in,
            dtilde_in=VectorField(grid=grid, values=theta1[..., np.newaxis] * tangent),
            theta0_modes=theta0_modes if on_circle else None,
            theta1_modes=theta1_modes if on_circle else None,
        )

    # twisted: needs two axes
    coords = grid.coordinates()
    x = coords[0] * (2.0 * math.pi / grid.lengths[0])
    y = coords[1] * (2.0 * math.pi / grid.lengths[1])
    polar = init.amplitude * np.sin(m * x)
    azimuth = init.twist * np.sin(m * y)
    d_in = DirectorField(
        grid=grid,
        values=np.stack(
            [np.cos(polar) * np.cos(azimuth), np.cos(polar) * np.sin(azimuth), np.sin(polar)],
            axis=-1,
        ),
    )
    if init.theta1 == "well_prepared":
        dtilde: VectorField = heat_rhs(d_in)
    elif init.theta1 == "zero":
        dtilde = VectorField(grid=grid, values=zeros)
    else:
        raw = init.theta1_amplitude * np.stack([np.sin(m * y), np.sin(m * x), np.cos(m * x)], axis=-1)
        dtilde = project_to_tangent(d_in, VectorField(grid=grid, values=raw))
    return InitialData(d_in=d_in, dtilde_in=VectorField(grid=grid, values=dtilde.values))


# --- Sampling ---


def sample_schedule(
    eps: float, dt: float, nsteps: int, stride: int, probe_steps: int | None
) -> tuple[list[int], list[int]]:
    """Step indices to sample for one eps, and the centres of residual probe triplets.

    Stride samples cover the horizon; inside [0, 10 eps] samples are at least
    ten per eps plus a geometric ladder from the first step.
    """
    steps = set(range(0, nsteps + 1, stride)) | {nsteps}
    layer_end = min(nsteps, int(round(LAYER_SAMPLES_PER_EPS * eps / dt)))
    spacing = max(1, int(math.floor(eps / LAYER_SAMPLES_PER_EPS / dt)))
    steps |= set(range(0, layer_end + 1, spacing))
    if layer_end >= 1:
        ladder = np.geomspace(1, layer_end, GEOMETRIC_SAMPLES)
        steps |= {int(round(s)) for s in ladder}

    centres: list[int] = []
    if probe_steps:
        for centre in range(stride, nsteps + 1, stride):
            if centre - probe_steps >= 0 and centre + probe_steps <= nsteps:
                centres.append(centre)
                steps |= {centre - probe_steps, centre + probe_steps}
    return sorted(steps), centres


# --- Per-eps run ---


def _l2(grid: SpectralGrid, values: np.ndarray) -> float:
    return order_norms(grid, values, 0)[0]


def run_single_eps(task: EpsTask) -> EpsRun:
    """Wave run plus remainder diagnostics for one eps. Library errors become a status."""
    eps = task.eps
    grid = task.d_in.grid
    try:
        wave: WaveRun = wave_solve(
            task.d_in,
            task.dtilde_in,
            eps,
            task.t_final,
            task.dt,
            stride=task.stride,
            sample_steps=task.samples,
        )
    except RelaxlimError as exc:
        logger.warning("eps run failed %s", format_kv(eps=eps, error=exc.code))
        return EpsRun(eps=eps, status=f"failed:{exc.code}")

    if task.snapshot_dir is not None:
        ensure_dir(task.snapshot_dir)
        for state in wave.trajectory:
            if state.step % task.stride == 0:
                write_field(task.snapshot_dir / f"deps_{state.step}.rlxf", state.d)
                write_field(task.snapshot_dir / f"veps_{state.step}.rlxf", state.v)

    if not task.heat:
        return EpsRun(eps=eps, status="ok", wave_trace=wave.trace)

    root = math.sqrt(eps)
    remainders = {}
    times: list[float] = []
    pos: list[float] = []
    vel: list[float] = []
    no_layer = 0.0
    for state in wave.trajectory:
        heat_state = HeatFlowState(
            t=state.t, step=state.step, d0=DirectorField(grid=grid, values=task.heat[state.step])
        )
        rem = extract_remainder(state, heat_state, task.D)
        remainders[state.step] = (rem, heat_state)
        times.append(state.t)
        pos.append(root * _l2(grid, rem.dR.values))
        vel.append(root * _l2(grid, rem.vR.values))
        if state.t <= NO_LAYER_WINDOW * eps:
            mismatch = state.v.values - heat_rhs_array(grid, heat_state.d0.values)
            no_layer = max(no_layer, _l2(grid, mismatch))

    fields: dict[str, list[float]] = {
        key: [] for key in ("E", "F", "h2_dR", "h3_dR", "h2_vR", "residual", "bound_quantity")
    }
    C_fit = math.nan
    if task.diagnostics:
        residual_at: dict[int, float] = {}
        if task.probe_steps:
            for centre in task.probe_centres:
                triplet = [remainders[centre + k * task.probe_steps][0] for k in (-1, 0, 1)]
                residual_at[centre] = remainder_residual(triplet, remainders[centre][1], task.D)
        for state in wave.trajectory:
            rem, _ = remainders[state.step]
            pair = energy_pair(rem)
            fields["E"].append(pair.E)
            fields["F"].append(pair.F)
            fields["h2_dR"].append(sobolev_norm_array(grid, rem.dR.values, 2))
            fields["h3_dR"].append(sobolev_norm_array(grid, rem.dR.values, 3))
            fields["h2_vR"].append(sobolev_norm_array(grid, rem.vR.values, 2))
            fields["residual"].append(residual_at.get(state.step, math.nan))
            fields["bound_quantity"].append(remainder_bound_quantity(rem))
        if len(times) >= 3:
            C_fit = fit_C_arrays(np.array(times), np.array(fields["E"]), np.array(fields["F"]), eps)

    run = EpsRun(
        eps=eps,
        status="ok",
        wave_trace=wave.trace,
        times=times,
        sup_pos_err=max(pos),
        sup_vel_err=max(vel),
        sup_E=max(fields["E"]) if fields["E"] else math.nan,
        C_fit=C_fit,
        no_layer_sup=no_layer,
        **fields,
    )
    logger.info(
        "eps run done %s",
        format_kv(eps=eps, sup_pos_err=run.sup_pos_err, sup_vel_err=run.sup_vel_err, sup_E=run.sup_E),
    )
    return run


# --- Study ---


def _safe_fit(points: list[tuple[float, float]], label: str) -> RateFit | None:
    if len(points) < 2:
        return None
    try:
        return rate_fit(points)
    except RateFitError as exc:
        logger.warning("rate fit skipped %s", format_kv(quantity=label, reason=exc.msg))
        return None


def _scalar_reference(data: InitialData, config: ExperimentConfig) -> ScalarStudy | None:
    eps_list = config.physics.sweep()
    if data.theta0_modes is None or data.theta1_modes is None or config.domain.dim != 1:
        return None
    if len(eps_list) < 4 or eps_list[0] / eps_list[-1] < 100.0:
        return None
    try:
        return scalar_limit_study(
            data.theta0_modes, data.theta1_modes, eps_list, config.time.t_final
        )
    except RateFitError as exc:
        logger.warning("scalar reference skipped %s", format_kv(reason=exc.msg))
        return None


def run_limit_study(config: ExperimentConfig) -> StudyReport:
    """Sweep eps: one heat run shared by all eps, one wave run per eps, then the bound bookkeeping."""
    grid = build_grid(config)
    data = build_initial_data(config.init, grid)
    D = compute_D(data.d_in, data.dtilde_in)
    M = M_value(D)
    D_l2 = _l2(grid, D.values)
    tangency = d_tangency_violation(data.d_in, D)
    T = config.time.t_final
    dt = config.time.dt
    nsteps = config.time.steps
    stride = config.time.stride
    eps_values = config.physics.sweep()
    out_dir = config.output.dir or settings.OUTPUT_DIR
    logger.info(
        "study start %s",
        format_kv(preset=config.init.preset, n=config.domain.n, eps_count=len(eps_values), M=M),
    )

    schedules = {
        eps: sample_schedule(eps, dt, nsteps, stride, config.time.probe_steps) for eps in eps_values
    }
    heat_states: dict[int, np.ndarray] = {}
    heat_trace = None
    heat_increase = None
    heat_failure: str | None = None
    if config.run.run_heat:
        union = sorted({s for steps, _ in schedules.values() for s in steps})
        try:
            heat = heat_solve(data.d_in, T, dt, stride=stride, sample_steps=union)
        except RelaxlimError as exc:
            # all rows are measured against this run
            logger.warning("heat run failed %s", format_kv(error=exc.code, eps_count=len(eps_values)))
            heat_failure = f"failed:{exc.code}"
        else:
            heat_states = {state.step: state.d0.values for state in heat.trajectory}
            heat_trace = heat.trace
            heat_increase = heat.max_energy_increase
            if config.output.snapshots:
                ensure_dir(out_dir)
                for state in heat.trajectory:
                    if state.step % stride == 0:
                        write_field(out_dir / f"d0_{state.step}.rlxf", state.d0)

    runs: list[EpsRun] = []
    if heat_failure is not None:
        runs = [EpsRun(eps=eps, status=heat_failure) for eps in eps_values]
    elif config.run.run_wave:
        tasks = [
            EpsTask(
                eps=eps,
                d_in=data.d_in,
                dtilde_in=data.dtilde_in,
                D=D,
                heat=heat_states,
                t_final=T,
                dt=dt,
                stride=stride,
                samples=schedules[eps][0],
                probe_steps=config.time.probe_steps,
                probe_centres=schedules[eps][1],
                diagnostics=config.run.run_remainder_diagnostics and bool(heat_states),
                snapshot_dir=(out_dir / eps_dirname(eps)) if config.output.snapshots else None,
            )
            for eps in eps_values
        ]
        workers = config.run.workers or settings.SWEEP_WORKERS
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(
                max_workers=workers, initializer=setup_logging, initargs=(settings.LOG_LEVEL,)
            ) as pool:
                runs = list(pool.map(run_single_eps, tasks))
        else:
            runs = [run_single_eps(task) for task in tasks]

    fitted = [r.C_fit for r in runs if r.ok and math.isfinite(r.C_fit)]
    C = max(fitted) if fitted else 0.0
    eps0 = epsilon0(M, C, T)
    c0 = c0_surrogate(M, C, eps0, T)
    below = [e for e in eps_values if e < eps0]
    c0_below = None
    if below:
        try:
            c0_below = bound_curve(M, C, max(below), T)
        except BoundUndefinedError:
            c0_below = math.inf

    rows: list[StudyRow] = []
    for run in runs:
        t_eff = T_eps(M, C, T, run.eps)
        report = None
        if run.ok and run.E:
            report = gronwall_check(np.array(run.times), np.array(run.E), M, C, run.eps, T)
        rows.append(
            StudyRow(
                eps=run.eps,
                sup_pos_err=run.sup_pos_err,
                sup_vel_err=run.sup_vel_err,
                sup_E=run.sup_E,
                M=M,
                C_fit=run.C_fit,
                eps0=eps0,
                T_eff=t_eff,
                status=run.status,
                gronwall=report,
                no_layer_ratio=run.no_layer_sup / D_l2 if D_l2 > 0 else math.nan,
            )
        )
    teps_ok = all(row.T_eff == T for row in rows if row.eps <= eps0)

    ok_rows = [r for r in rows if r.status == "ok" and math.isfinite(r.sup_pos_err)]
    position_fit = _safe_fit([(r.eps, r.sup_pos_err) for r in ok_rows], "position")
    velocity_fit = _safe_fit([(r.eps, r.sup_vel_err) for r in ok_rows], "velocity")
    decomposition = None
    if config.run.run_decomposition_check:
        decomposition = verify_decomposition(seed=config.run.seed, n=32, dim=1)

    logger.info(
        "study done %s",
        format_kv(
            C_fit=C,
            eps0=eps0,
            slope_pos=position_fit.slope if position_fit else None,
            slope_vel=velocity_fit.slope if velocity_fit else None,
        ),
    )
    return StudyReport(
        config=config,
        T=T,
        M=M,
        D_l2=D_l2,
        d_tangency=tangency,
        C_fit=C,
        eps0=eps0,
        c0=c0,
        c0_below_eps0=c0_below,
        teps_equals_T=teps_ok,
        rows=rows,
        runs=runs,
        heat_trace=heat_trace,
        heat_max_energy_increase=heat_increase,
        position_fit=position_fit,
        velocity_fit=velocity_fit,
        scalar_reference=_scalar_reference(data, config),
        decomposition=decomposition,
    )


def run_single(config: ExperimentConfig, eps: float | None = None) -> StudyReport:
    """One eps (the given one, else physics.eps, else the largest of eps_list)."""
    value = eps if eps is not None else (config.physics.eps or config.physics.sweep()[0])
    single = config.model_copy(update={"physics": PhysicsSection(eps=value)})
    return run_limit_study(single)


# --- Decomposition certificate ---


def verify_decomposition(
    seed: int = 0,
    n: int = 32,
    dim: int = 1,
    sets: int = 20,
    eps_values: tuple[float, ...] = (0.3, 0.05, 0.01),
    tolerance: float = 1e-11,
) -> DecompositionReport:
    """Check S + R against the brute-force oracle on seeded random band-limited fields."""
    grid = SpectralGrid.create(n=n, dim=dim)
    rng = np.random.default_rng(seed)
    worst = {"deviation": 0.0, "set": -1.0, "eps": math.nan, "t": math.nan}
    cases = 0
    for index in range(sets):
        d0, w0, w00, D, dR, vR = (
            random_band_limited_field(grid, rng, components=3, max_mode=4) for _ in range(6)
        )
        for eps in eps_values:
            for t in (0.0, eps, 10.0 * eps):
                dev = decomposition_deviation(d0, w0, w00, D, dR, vR, eps, t)  # type: ignore[arg-type]
                cases += 1
                if dev > worst["deviation"]:
                    worst = {"deviation": dev, "set": float(index), "eps": eps, "t": t}
    report = DecompositionReport(
        seed=seed,
        n=n,
        dim=dim,
        cases=cases,
        max_deviation=worst["deviation"],
        tolerance=tolerance,
        worst=worst,
    )
    logger.info(
        "decomposition check %s",
        format_kv(cases=cases, max_deviation=report.max_deviation, passed=report.passed),
    )
    return report


# --- Reports ---


def eps_dirname(eps: float) -> str:
    return f"eps_{eps:g}"


def _remainder_rows(run: EpsRun, M: float, C: float) -> list[list[float]]:
    if not run.E:
        return []
    running = fit_C_running(np.array(run.times), np.array(run.E), np.array(run.F), run.eps)
    rows = []
    for i, t in enumerate(run.times):
        try:
            bound = bound_curve(M, C, run.eps, t)
        except BoundUndefinedError:
            bound = math.nan
        rows.append(
            [
                t,
                run.E[i],
                run.F[i],
                run.h2_dR[i],
                run.h3_dR[i],
                run.h2_vR[i],
                run.residual[i],
                float(running[i]),
                bound,
            ]
        )
    return rows


def _summary_lines(report: StudyReport) -> list[str]:
    def num(value: float | None) -> str:
        return "none" if value is None else format_float(value)

    lines = [
        f"preset: {report.config.init.preset}",
        f"grid: dim={report.config.domain.dim} n={','.join(str(n) for n in report.config.domain.n)}",
        f"T: {num(report.T)}",
        "norms: raw torus integrals (no volume normalisation)",
        f"M: {num(report.M)}",
        f"D_l2: {num(report.D_l2)}",
        f"D_tangency_violation: {num(report.d_tangency)}",
        f"C_fit: {num(report.C_fit)}",
        f"eps0: {num(report.eps0)}",
        f"C0_surrogate: {num(report.c0)}",
        f"C0_at_largest_eps_below_eps0: {num(report.c0_below_eps0)}",
        f"T_eps_equals_T_below_eps0: {'yes' if report.teps_equals_T else 'no'}",
    ]
    if report.heat_max_energy_increase is not None:
        lines.append(f"heat_max_energy_increase: {num(report.heat_max_energy_increase)}")
    for name, fit in (("position", report.position_fit), ("velocity", report.velocity_fit)):
        if fit is None:
            lines.append(f"slope_{name}: none")
        elif fit.exact_zero:
            lines.append(f"slope_{name}: exact-zero")
        else:
            lines.append(f"slope_{name}: {num(fit.slope)} residual={num(fit.residual)}")
    if report.scalar_reference is not None:
        ref = report.scalar_reference
        for name, fit in (("position", ref.position), ("velocity", ref.velocity)):
            value = "exact-zero" if fit.exact_zero else num(fit.slope)
            lines.append(f"scalar_slope_{name}: {value}")
    finite_E = [r.sup_E for r in report.rows if math.isfinite(r.sup_E)]
    if finite_E and math.isfinite(report.rows[0].sup_E) and report.rows[0].sup_E > 0:
        lines.append(f"sup_E_ratio_to_largest_eps: {num(max(finite_E) / report.rows[0].sup_E)}")
    for row in report.rows:
        gron = row.gronwall
        parts = [f"eps={format_float(row.eps)}", f"status={row.status}"]
        if gron is not None:
            parts += [
                f"envelope_ok={gron.envelope_ok}",
                f"bound_ok={gron.bound_ok}",
                f"samples={gron.samples_checked}",
            ]
        parts.append(f"no_layer_ratio={format_float(row.no_layer_ratio)}")
        lines.append("row: " + " ".join(parts))
    if report.decomposition is not None:
        dec = report.decomposition
        lines.append(
            f"decomposition: cases={dec.cases} max_deviation={num(dec.max_deviation)} "
            f"passed={'yes' if dec.passed else 'no'}"
        )
    return lines


def emit_report(report: StudyReport | None, out_dir: Path) -> list[Path]:
    """Write study.csv, traces and summary.txt; an empty study yields a header-only CSV."""
    ensure_dir(out_dir)
    written = [out_dir / "study.csv"]
    if report is None:
        write_rows(written[0], STUDY_HEADER, [])
        return written
    write_rows(written[0], STUDY_HEADER, [row.csv_row() for row in report.rows])

    if report.heat_trace is not None:
        path = out_dir / "heat_trace.csv"
        write_trace(path, report.heat_trace)
        written.append(path)
    for run in report.runs:
        if run.wave_trace is None:
            continue
        run_dir = ensure_dir(out_dir / eps_dirname(run.eps))
        write_trace(run_dir / "wave_trace.csv", run.wave_trace)
        written.append(run_dir / "wave_trace.csv")
        rows = _remainder_rows(run, report.M, report.C_fit)
        if rows:
            write_rows(run_dir / "remainder_trace.csv", REMAINDER_TRACE_HEADER, rows)
            written.append(run_dir / "remainder_trace.csv")

    summary = out_dir / "summary.txt"
    summary.write_text("\n".join(_summary_lines(report)) + "\n", encoding="utf-8")
    written.append(summary)
    logger.info("report written %s", format_kv(dir=out_dir, files=len(written)))
    return written
