# relaxlim/commands/study.py
# PURPOSE: `run` (one eps) and `sweep` (eps_list) from a config file

from pathlib import Path

import click

from ..config import settings
from ..config_file import load_config
from ..harness import emit_report, run_limit_study, run_single
from ..models import ExperimentConfig


def _with_output(config: ExperimentConfig, override: Path | None) -> tuple[ExperimentConfig, Path]:
    """Resolve the output directory once so snapshots and reports share it."""
    target = override or config.output.dir or settings.OUTPUT_DIR
    output = config.output.model_copy(update={"dir": target})
    return config.model_copy(update={"output": output}), target


def _echo_rows(report_rows: list) -> None:
    for row in report_rows:
        click.echo(
            f"eps={row.eps:g} status={row.status} sup_pos_err={row.sup_pos_err:.3e} "
            f"sup_vel_err={row.sup_vel_err:.3e} sup_E={row.sup_E:.3e}"
        )


@click.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--eps", type=float, default=None, help="Override physics.eps.")
@click.option("--output", type=click.Path(path_type=Path), default=None)
def run_command(config_path: Path, eps: float | None, output: Path | None) -> None:
    """Heat flow and one damped wave map run with remainder diagnostics."""
    config, out_dir = _with_output(load_config(config_path), output)
    report = run_single(config, eps)
    written = emit_report(report, out_dir)
    _echo_rows(report.rows)
    click.echo(f"wrote {len(written)} files to {written[0].parent}")


@click.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--output", type=click.Path(path_type=Path), default=None)
def sweep_command(config_path: Path, output: Path | None) -> None:
    """Full eps sweep: study.csv, per-eps traces, rate fits and summary.txt."""
    config, out_dir = _with_output(load_config(config_path), output)
    report = run_limit_study(config)
    written = emit_report(report, out_dir)
    _echo_rows(report.rows)
    for name, fit in (("position", report.position_fit), ("velocity", report.velocity_fit)):
        if fit is not None:
            slope = "exact-zero" if fit.exact_zero else f"{fit.slope:.4f}"
            click.echo(f"slope_{name}={slope}")
    click.echo(f"wrote {len(written)} files to {written[0].parent}")
