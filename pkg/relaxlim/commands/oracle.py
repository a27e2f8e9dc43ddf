# relaxlim/commands/oracle.py
# PURPOSE: closed-form single-mode values and the scalar eps -> 0 rate table

from pathlib import Path

import click

from ..scalar_oracle import ScalarModeIC, damped_mode, scalar_limit_study
from ..store import ensure_dir, write_rows

SCALAR_RATES_HEADER = ("eps", "err_pos", "err_vel")


def _float_list(value: str | None) -> list[float]:
    if not value:
        return []
    return [float(part) for part in value.replace(",", " ").split()]


@click.command("oracle")
@click.option("--k", type=click.IntRange(min=0), required=True)
@click.option("--eps", type=float, required=True)
@click.option("--a", type=float, required=True, help="Initial value g(0).")
@click.option("--b", type=float, required=True, help="Initial slope g'(0).")
@click.option("--t", "times", type=float, multiple=True, required=True)
@click.option("--eps-list", default=None, help="Comma list; also write the scalar rate table.")
@click.option("--output", type=click.Path(path_type=Path), default=None)
def oracle_command(
    k: int,
    eps: float,
    a: float,
    b: float,
    times: tuple[float, ...],
    eps_list: str | None,
    output: Path | None,
) -> None:
    """Print g(t), g'(t) for eps g'' + g' + k^2 g = 0, g(0)=a, g'(0)=b."""
    ic = ScalarModeIC(k=k, a=a, b=b, eps=eps)
    values, slopes = damped_mode(ic, list(times))
    for t, g, dg in zip(times, values, slopes, strict=True):
        click.echo(f"t={t:.17g} g={g:.17g} dg={dg:.17g}")

    sweep = sorted(_float_list(eps_list), reverse=True)
    if not sweep:
        return
    study = scalar_limit_study({k: a}, {k: b}, sweep, max(times))
    rows: list[list[object]] = [[p.eps, p.err_pos, p.err_vel] for p in study.points]
    pos = study.position
    vel = study.velocity
    # footer: slope_pos, slope_vel, worst fit residual of the two
    residual = max(pos.residual or 0.0, vel.residual or 0.0)
    rows.append(
        [
            "exact-zero" if pos.exact_zero else pos.slope,
            "exact-zero" if vel.exact_zero else vel.slope,
            residual,
        ]
    )
    out_dir = ensure_dir(output or Path("."))
    write_rows(out_dir / "scalar_rates.csv", SCALAR_RATES_HEADER, rows)
    click.echo(f"slope_pos={rows[-1][0]} slope_vel={rows[-1][1]} residual={residual:.3e}")
