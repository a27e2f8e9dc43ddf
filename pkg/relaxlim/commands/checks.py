# relaxlim/commands/checks.py
# PURPOSE: `verify-decomposition` certificate and `fit-rates` over an existing study.csv

import math
from pathlib import Path

import click

from ..errors import FieldFormatError
from ..harness import verify_decomposition
from ..rates import rate_fit
from ..store import read_rows


@click.command("verify-decomposition")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", type=int, default=32, show_default=True)
@click.option("--dim", type=int, default=1, show_default=True)
@click.option("--sets", type=int, default=20, show_default=True)
def verify_decomposition_command(seed: int, n: int, dim: int, sets: int) -> None:
    """S + R against the brute-force remainder forcing on random fields."""
    report = verify_decomposition(seed=seed, n=n, dim=dim, sets=sets)
    click.echo(
        f"cases={report.cases} max_deviation={report.max_deviation:.3e} "
        f"tolerance={report.tolerance:.0e} passed={'yes' if report.passed else 'no'}"
    )
    if not report.passed:
        worst = report.worst
        click.echo(f"worst set={int(worst['set'])} eps={worst['eps']:g} t={worst['t']:g}", err=True)
        raise click.exceptions.Exit(3)


@click.command("fit-rates")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path))
def fit_rates_command(input_path: Path) -> None:
    """Refit log(err) against log(eps) from the ok rows of a study.csv."""
    rows = read_rows(input_path)
    missing = {"eps", "sup_pos_err", "sup_vel_err", "status"} - set(rows[0] if rows else {})
    if missing:
        raise FieldFormatError("study csv lacks columns", {"missing": sorted(missing)})
    ok = [row for row in rows if row["status"] == "ok" and math.isfinite(float(row["sup_pos_err"]))]
    for label, column in (("position", "sup_pos_err"), ("velocity", "sup_vel_err")):
        fit = rate_fit((float(row["eps"]), float(row[column])) for row in ok)
        if fit.exact_zero:
            click.echo(f"{label}: exact-zero")
        else:
            click.echo(f"{label}: slope={fit.slope:.6f} residual={fit.residual:.3e} points={len(fit.points)}")
