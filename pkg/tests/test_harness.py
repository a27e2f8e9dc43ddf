import math

import numpy as np
import pytest

from relaxlim import harness
from relaxlim.config_file import config_from_mapping
from relaxlim.errors import DivergedError
from relaxlim.grid_spectral import SpectralGrid
from relaxlim.harness import (
    STUDY_HEADER,
    build_initial_data,
    emit_report,
    run_limit_study,
    run_single,
    sample_schedule,
    verify_decomposition,
)
from relaxlim.layer_remainder import compute_D
from relaxlim.models import InitSection
from relaxlim.store import read_rows

EPS_LIST = "0.1, 0.03, 0.01, 0.003, 0.001"


def _small_config(tmp_path, **overrides):
    mapping = {
        "domain": {"n": "16"},
        "time": {"t_final": "0.01", "dt": "1e-3", "stride": "5"},
        "physics": {"eps_list": "0.1, 0.05"},
        "init": {"preset": "equator"},
        "output": {"dir": str(tmp_path / "out")},
    }
    for key, value in overrides.items():
        mapping.setdefault(key, {}).update(value)
    return config_from_mapping(mapping)


@pytest.fixture(scope="module")
def sweep_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    config = config_from_mapping(
        {
            "domain": {"n": "32"},
            "time": {"t_final": "0.2", "dt": "1e-4", "stride": "200", "probe_dt": "2e-4"},
            "physics": {"eps_list": EPS_LIST},
            "init": {"preset": "equator", "amplitude": "0.1", "theta1": "explicit", "theta1_amplitude": "0.1"},
            "output": {"dir": str(out)},
        }
    )
    return run_limit_study(config), out


def test_presets_are_compatible():
    grid1 = SpectralGrid.create(n=32)
    grid2 = SpectralGrid.create(n=32, dim=2)

    constant = build_initial_data(InitSection(preset="constant"), grid1)
    assert np.all(constant.d_in.values[:, 2] == 1.0)
    assert np.all(constant.dtilde_in.values == 0.0)

    for theta1 in ("explicit", "well_prepared", "zero"):
        data = build_initial_data(InitSection(preset="equator", theta1=theta1), grid1)
        D = compute_D(data.d_in, data.dtilde_in)
        assert data.theta0_modes == {1: 0.1}
        if theta1 == "well_prepared":
            assert np.max(np.abs(D.values)) < 1e-12
            assert data.theta1_modes == {1: -0.1}

        twisted = build_initial_data(InitSection(preset="twisted", theta1=theta1), grid2)
        D = compute_D(twisted.d_in, twisted.dtilde_in)
        assert twisted.theta0_modes is None
        if theta1 == "well_prepared":
            assert np.max(np.abs(D.values)) < 1e-12
        if theta1 == "zero":
            assert np.all(twisted.dtilde_in.values == 0.0)


def test_sample_schedule():
    steps, centres = sample_schedule(eps=0.005, dt=1e-4, nsteps=1000, stride=250, probe_steps=5)
    assert steps == sorted(set(steps))
    assert set(range(0, 1001, 250)) <= set(steps)
    assert 1 in steps and max(steps) == 1000
    assert centres == [250, 500, 750]
    assert {245, 255, 495, 505, 745, 755} <= set(steps)
    # at least ten samples per eps across the layer window [0, 10 eps]
    assert len([s for s in steps if s <= 500]) >= 100

    no_probe_steps, no_centres = sample_schedule(0.005, 1e-4, 1000, 250, None)
    assert no_centres == [] and 245 not in no_probe_steps


def test_verify_decomposition_passes():
    report = verify_decomposition(seed=3, n=16, dim=1, sets=2)
    assert report.cases == 18
    assert report.passed
    assert report.max_deviation <= 1e-11


def test_sweep_rates_and_bounds(sweep_report):
    report, _ = sweep_report
    assert [row.eps for row in report.rows] == [0.1, 0.03, 0.01, 0.003, 0.001]
    assert all(row.status == "ok" for row in report.rows)
    assert report.M > 1.0

    # O(eps) position and velocity errors once the layer is subtracted
    assert 0.75 < report.position_fit.slope < 1.25
    assert 0.75 < report.velocity_fit.slope < 1.25
    scalar = report.scalar_reference
    assert scalar is not None
    assert abs(report.position_fit.slope - scalar.position.slope) < 0.1
    assert abs(report.velocity_fit.slope - scalar.velocity.slope) < 0.1

    # without the layer the velocity misses by |D| at t = 0
    assert all(row.no_layer_ratio >= 1.0 - 1e-9 for row in report.rows)
    for row in report.rows:
        if row.eps <= 0.01:
            assert 0.9 <= row.no_layer_ratio <= 1.1
    assert report.rows[-1].sup_vel_err < 0.1 * report.D_l2

    assert report.teps_equals_T
    for row in report.rows:
        assert row.gronwall is not None
        assert row.gronwall.envelope_ok
        assert row.gronwall.bound_ok
        if row.eps <= report.eps0:
            assert row.T_eff == report.T
    assert report.d_tangency < 1e-12


def test_sweep_residuals_are_recorded(sweep_report):
    report, _ = sweep_report
    for run in report.runs:
        finite = [r for r in run.residual if math.isfinite(r)]
        assert len(finite) == 9
        assert len(run.E) == len(run.times) == len(run.bound_quantity)
        assert run.E[0] == pytest.approx(report.M, rel=1e-9)


def test_emit_report_layout(sweep_report, tmp_path):
    report, _ = sweep_report
    written = emit_report(report, tmp_path)
    assert tmp_path / "study.csv" in written
    rows = read_rows(tmp_path / "study.csv")
    assert list(rows[0].keys()) == list(STUDY_HEADER)
    assert len(rows) == 5
    assert (tmp_path / "heat_trace.csv").exists()
    for eps in ("0.1", "0.03", "0.01", "0.003", "0.001"):
        assert (tmp_path / f"eps_{eps}" / "wave_trace.csv").exists()
        remainder = read_rows(tmp_path / f"eps_{eps}" / "remainder_trace.csv")
        assert "C_fit_running" in remainder[0] and "bound_value" in remainder[0]
    summary = (tmp_path / "summary.txt").read_text()
    assert "slope_position:" in summary
    assert "scalar_slope_velocity:" in summary
    assert "eps0:" in summary


def test_empty_study_writes_header_only(tmp_path):
    emit_report(None, tmp_path)
    assert (tmp_path / "study.csv").read_text() == ",".join(STUDY_HEADER) + "\n"


def test_failed_eps_becomes_a_status_row(tmp_path, monkeypatch):
    real = harness.wave_solve

    def flaky(d_in, dtilde_in, eps, *args, **kwargs):
        if eps == 0.05:
            raise DivergedError(0.002, "wave_map")
        return real(d_in, dtilde_in, eps, *args, **kwargs)

    monkeypatch.setattr(harness, "wave_solve", flaky)
    report = run_limit_study(_small_config(tmp_path))
    statuses = {row.eps: row.status for row in report.rows}
    assert statuses == {0.1: "ok", 0.05: "failed:diverged"}
    assert report.position_fit is None
    written = emit_report(report, tmp_path / "out")
    assert len(read_rows(written[0])) == 2


def test_heat_divergence_fails_every_row_but_keeps_the_report(tmp_path, monkeypatch):
    def diverging(*args, **kwargs):
        raise DivergedError(0.004, "heat_flow")

    monkeypatch.setattr(harness, "heat_solve", diverging)
    report = run_limit_study(_small_config(tmp_path, output={"snapshots": "true"}))
    assert [row.status for row in report.rows] == ["failed:diverged", "failed:diverged"]
    assert all(math.isnan(row.sup_pos_err) for row in report.rows)
    assert report.heat_trace is None
    assert report.position_fit is None and report.velocity_fit is None

    written = emit_report(report, tmp_path / "out")
    rows = read_rows(written[0])
    assert [r["status"] for r in rows] == ["failed:diverged", "failed:diverged"]
    assert (tmp_path / "out" / "summary.txt").exists()
    assert not list((tmp_path / "out").glob("**/*.rlxf"))


def test_run_single_and_snapshots(tmp_path):
    config = _small_config(tmp_path, output={"snapshots": "true"})
    report = run_single(config)
    assert [row.eps for row in report.rows] == [0.1]
    out = tmp_path / "out"
    assert (out / "d0_5.rlxf").exists()
    assert (out / "eps_0.1" / "deps_10.rlxf").exists()
    assert (out / "eps_0.1" / "veps_0.rlxf").exists()

    explicit = run_single(_small_config(tmp_path), eps=0.02)
    assert [row.eps for row in explicit.rows] == [0.02]


def test_process_pool_matches_serial(tmp_path):
    serial = run_limit_study(_small_config(tmp_path))
    parallel = run_limit_study(_small_config(tmp_path, run={"workers": "2"}))
    for a, b in zip(serial.rows, parallel.rows, strict=True):
        assert a.eps == b.eps
        assert a.sup_pos_err == b.sup_pos_err
        assert a.sup_vel_err == b.sup_vel_err
