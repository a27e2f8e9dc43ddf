import io
import logging

import click
from click.testing import CliRunner

from relaxlim.errors import ConfigError, EpsilonRangeError, register_error_handler
from relaxlim.logging_utils import format_kv, setup_logging


def test_logging_utils_initializes_and_respects_existing_handlers():
    root = logging.getLogger()
    # Save and clear existing handlers to hit initialization branch
    saved = list(root.handlers)
    saved_level = root.level
    stream = io.StringIO()
    try:
        for h in saved:
            root.removeHandler(h)
        setup_logging("INFO", stream=stream)
        assert root.handlers, "setup_logging should add a handler when none present"
        assert root.level == logging.INFO
        logging.getLogger("relaxlim.test").info("sweep done %s", format_kv(eps=0.01, n=32))
        line = stream.getvalue().strip()
        assert line.endswith("INFO relaxlim.test sweep done eps=0.01 n=32")

        # Now with existing handlers, it should only adjust level and not add more
        count = len(root.handlers)
        setup_logging("WARNING")
        assert len(root.handlers) == count
        assert root.level == logging.WARNING
    finally:
        # Restore original handlers
        for h in list(root.handlers):
            root.removeHandler(h)
        for h in saved:
            root.addHandler(h)
        root.setLevel(saved_level)


def test_format_kv_shortens_floats():
    assert format_kv(C=1.0 / 3.0, status="ok", skipped=None) == "C=0.333333 status=ok skipped=None"


def test_error_rendering():
    err = EpsilonRangeError(0.7)
    assert err.render().startswith("error=eps_out_of_range")
    cfg = ConfigError([{"type": "missing", "loc": ["time", "t_final"], "msg": "Field required"}])
    assert cfg.render().splitlines()[1] == "  loc=time.t_final type=missing msg=Field required"


def test_error_handler_exit_codes():
    @click.group()
    def group():
        pass

    @group.command()
    def known():
        raise EpsilonRangeError(0.9)

    @group.command()
    def boom():
        raise RuntimeError("unexpected")

    register_error_handler(group)
    runner = CliRunner()

    result = runner.invoke(group, ["known"])
    assert result.exit_code == 2
    assert "error=eps_out_of_range" in result.output

    result = runner.invoke(group, ["boom"])
    assert result.exit_code == 1
    assert "error=internal" in result.output
