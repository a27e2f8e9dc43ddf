from click.testing import CliRunner

from relaxlim import __version__
from relaxlim.main import cli
from relaxlim.store import read_rows

SMALL = """
domain.n = 16
time.t_final = 0.01
time.dt = 1e-3
time.stride = 5
physics.eps = 0.05
init.preset = equator
"""


def test_version():
    result = CliRunner().invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_oracle_values_and_rate_table(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli, ["oracle", "--k", "1", "--eps", "0.1", "--a", "1", "--b", "0", "--t", "0", "--t", "0.5"]
    )
    assert result.exit_code == 0, result.output
    lines = [line for line in result.output.splitlines() if line.startswith("t=")]
    assert len(lines) == 2
    assert lines[0].startswith("t=0 ")

    result = runner.invoke(
        cli,
        [
            "oracle", "--k", "1", "--eps", "0.1", "--a", "0.1", "--b", "0.1", "--t", "1",
            "--eps-list", "0.1,0.01,0.001,0.0001", "--output", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    text = (tmp_path / "scalar_rates.csv").read_text().splitlines()
    assert text[0] == "eps,err_pos,err_vel"
    assert len(text) == 6
    slope_pos, slope_vel, residual = (float(v) for v in text[-1].split(","))
    assert 0.8 < slope_pos < 1.2
    assert 0.8 < slope_vel < 1.2
    assert 0.0 <= residual < 1.0
    assert "slope_pos=" in result.output and "residual=" in result.output


def test_oracle_rejects_short_eps_list(tmp_path):
    result = CliRunner().invoke(
        cli,
        ["oracle", "--k", "1", "--eps", "0.1", "--a", "1", "--b", "0", "--t", "1", "--eps-list", "0.1,0.01"],
    )
    assert result.exit_code == 2
    assert "error=rate_fit" in result.output


def test_oracle_rate_table_needs_positive_horizon(tmp_path):
    result = CliRunner().invoke(
        cli,
        [
            "oracle", "--k", "1", "--eps", "0.1", "--a", "1", "--b", "0", "--t", "0",
            "--eps-list", "0.1,0.01,0.001,0.0001", "--output", str(tmp_path),
        ],
    )
    assert result.exit_code == 2
    assert "error=rate_fit" in result.output
    assert not (tmp_path / "scalar_rates.csv").exists()


def test_verify_decomposition_command():
    result = CliRunner().invoke(cli, ["verify-decomposition", "--n", "16", "--sets", "2"])
    assert result.exit_code == 0, result.output
    assert "passed=yes" in result.output


def test_run_and_fit_rates(write_config, tmp_path):
    out = tmp_path / "out"
    runner = CliRunner()
    result = runner.invoke(cli, ["run", "--config", str(write_config(SMALL)), "--output", str(out)])
    assert result.exit_code == 0, result.output
    assert "eps=0.05 status=ok" in result.output
    rows = read_rows(out / "study.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"
    assert (out / "summary.txt").exists()

    study = tmp_path / "study.csv"
    study.write_text(
        "eps,sup_pos_err,sup_vel_err,sup_E,M,C_fit,eps0,T_eff,status\n"
        "0.1,0.2,0.1,1,1,0,0.5,1,ok\n"
        "0.01,0.02,0.01,1,1,0,0.5,1,ok\n"
        "0.001,0.002,0.001,1,1,0,0.5,1,ok\n"
        "0.0001,nan,nan,nan,1,nan,0.5,1,failed:diverged\n"
    )
    result = runner.invoke(cli, ["fit-rates", "--input", str(study)])
    assert result.exit_code == 0, result.output
    assert "position: slope=1.000000" in result.output
    assert "velocity: slope=1.000000" in result.output


def test_sweep_output_option_also_holds_snapshots(write_config, tmp_path):
    configured = tmp_path / "configured"
    override = tmp_path / "override"
    text = SMALL.replace("physics.eps = 0.05", "physics.eps_list = 0.1, 0.05")
    text += f"output.dir = {configured}\noutput.snapshots = true\n"
    result = CliRunner().invoke(
        cli, ["sweep", "--config", str(write_config(text)), "--output", str(override)]
    )
    assert result.exit_code == 0, result.output
    assert (override / "study.csv").exists()
    assert (override / "d0_5.rlxf").exists()
    assert (override / "eps_0.1" / "deps_10.rlxf").exists()
    assert (override / "eps_0.05" / "veps_0.rlxf").exists()
    assert not configured.exists()


def test_invalid_config_exits_with_code_2(write_config):
    path = write_config("time.t_final = 1\nphysics.eps = 0.9\nbroken line\n")
    result = CliRunner().invoke(cli, ["sweep", "--config", str(path)])
    assert result.exit_code == 2
    assert "error=config_invalid" in result.output
