"""Exception hierarchy and the CLI error handler.

Every error carries a short machine `code` and a `detail` payload shaped like
pydantic's validation entries (`type`, `loc`, `msg`, `input`) so the CLI can
render them uniformly.
"""

import logging
from collections.abc import Sequence
from typing import Any

import click

logger = logging.getLogger(__name__)


class RelaxlimError(Exception):
    code = "relaxlim_error"

    def __init__(self, msg: str, detail: Any = None) -> None:
        super().__init__(msg)
        self.msg = msg
        self.detail = detail

    def render(self) -> str:
        if self.detail is None:
            return f"error={self.code} msg={self.msg}"
        return f"error={self.code} msg={self.msg} detail={self.detail}"


class DegeneratePointError(RelaxlimError):
    code = "degenerate_point"

    def __init__(self, worst_index: tuple[int, ...], norm: float) -> None:
        super().__init__(
            "vector field too close to zero to project onto the sphere",
            {"worst_index": list(worst_index), "norm": norm},
        )
        self.worst_index = worst_index
        self.norm = norm


class CompatibilityError(RelaxlimError):
    code = "incompatible_initial_data"

    def __init__(self, max_violation: float, tolerance: float) -> None:
        super().__init__(
            "initial velocity is not tangent to the initial director",
            {"max_violation": max_violation, "tolerance": tolerance},
        )
        self.max_violation = max_violation


class DivergedError(RelaxlimError):
    code = "diverged"

    def __init__(self, t: float, solver: str) -> None:
        super().__init__(f"{solver} produced non-finite values", {"t": t, "solver": solver})
        self.t = t


class GridMismatchError(RelaxlimError):
    code = "grid_mismatch"


class TimeMismatchError(RelaxlimError):
    code = "time_mismatch"


class UnsupportedOrderError(RelaxlimError):
    code = "unsupported_order"


class EpsilonRangeError(RelaxlimError):
    code = "eps_out_of_range"

    def __init__(self, eps: float) -> None:
        super().__init__("eps must lie in (0, 1/2)", {"eps": eps})
        self.eps = eps


class BoundUndefinedError(RelaxlimError):
    code = "bound_undefined"


class InsufficientSnapshotsError(RelaxlimError):
    code = "insufficient_snapshots"


class TraceTooShortError(RelaxlimError):
    code = "trace_too_short"


class RateFitError(RelaxlimError):
    code = "rate_fit"


class FieldFormatError(RelaxlimError):
    code = "field_format"


class OutputError(RelaxlimError):
    code = "output_unwritable"


class ConfigError(RelaxlimError):
    """Configuration rejected; `details` lists every offending entry."""

    code = "config_invalid"

    def __init__(self, details: Sequence[dict[str, Any]]) -> None:
        self.details = list(details)
        super().__init__(f"{len(self.details)} configuration error(s)", self.details)

    def render(self) -> str:
        lines = [f"error={self.code} count={len(self.details)}"]
        for item in self.details:
            loc = ".".join(str(p) for p in item.get("loc", ()))
            lines.append(f"  loc={loc} type={item.get('type')} msg={item.get('msg')}")
        return "\n".join(lines)


def register_error_handler(group: click.Group) -> None:
    """Render library errors as `error=<code>` on stderr with exit status 2.

    Unexpected exceptions are logged with traceback and exit with status 1.
    """
    invoke = group.invoke

    def guarded_invoke(ctx: click.Context) -> Any:
        try:
            return invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except RelaxlimError as exc:
            click.echo(exc.render(), err=True)
            ctx.exit(2)
        except Exception:
            logger.exception("unhandled error command=%s", ctx.invoked_subcommand)
            click.echo("error=internal", err=True)
            ctx.exit(1)

    group.invoke = guarded_invoke  # type: ignore[method-assign]
