import logging
import sys
from typing import TextIO


def setup_logging(level: str = "INFO", stream: TextIO | None = None) -> None:
    """Configure the root logger once for CLI runs.

    Format: time level logger message k=v ...
    Sweep workers inherit this through the process pool initializer.
    """
    root = logging.getLogger()
    if root.handlers:
        # Respect existing (pytest capture, embedding app) but align level
        root.setLevel(level.upper())
        return

    handler = logging.StreamHandler(stream=stream or sys.stdout)
    handler.setFormatter(
        logging.Formatter(
            fmt="%(asctime)s %(levelname)s %(name)s %(message)s", datefmt="%Y-%m-%dT%H:%M:%S"
        )
    )
    root.addHandler(handler)
    root.setLevel(level.upper())


def format_kv(**fields: object) -> str:
    """Render keyword fields as a `k=v k=v` message body, floats in short form."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        parts.append(f"{key}={value}")
    return " ".join(parts)
