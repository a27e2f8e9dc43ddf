import click

from . import __version__
from .commands.checks import fit_rates_command, verify_decomposition_command
from .commands.oracle import oracle_command
from .commands.study import run_command, sweep_command
from .config import settings
from .errors import register_error_handler
from .logging_utils import setup_logging


@click.group()
@click.version_option(__version__, prog_name="relaxlim")
@click.option("--log-level", default=None, help="Overrides RELAXLIM_LOG_LEVEL.")
def cli(log_level: str | None) -> None:
    """Damped wave maps into S^2 at small eps against the harmonic map heat flow."""
    setup_logging(log_level or settings.LOG_LEVEL)


cli.add_command(run_command)
cli.add_command(sweep_command)
cli.add_command(oracle_command)
cli.add_command(verify_decomposition_command)
cli.add_command(fit_rates_command)

# Unified error rendering
register_error_handler(cli)


def main() -> None:
    cli()
