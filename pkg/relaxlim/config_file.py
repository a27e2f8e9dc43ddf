"""Experiment config files: `section.key = value` lines, `#` comments.

Every problem in a file is reported at once through a single ConfigError
whose details follow pydantic's error entries (type, loc, msg, input).
"""

import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .errors import ConfigError
from .models import ExperimentConfig

logger = logging.getLogger(__name__)


def parse_config_text(text: str) -> dict[str, dict[str, str]]:
    """Parse into {section: {key: raw value}}; raises ConfigError on syntax problems."""
    sections: dict[str, dict[str, str]] = {}
    errors: list[dict[str, Any]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(
                {"type": "syntax_error", "loc": ["line", lineno], "msg": "expected `section.key = value`", "input": raw}
            )
            continue
        name, value = (part.strip() for part in line.split("=", 1))
        section, dot, key = name.partition(".")
        if not dot or not section or not key or "." in key:
            errors.append(
                {"type": "syntax_error", "loc": ["line", lineno], "msg": "key must look like `section.key`", "input": name}
            )
            continue
        bucket = sections.setdefault(section, {})
        if key in bucket:
            errors.append(
                {"type": "duplicate_key", "loc": [section, key], "msg": f"duplicate key on line {lineno}", "input": value}
            )
            continue
        bucket[key] = value
    if errors:
        raise ConfigError(errors)
    return sections


def config_from_mapping(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        details = [
            {"type": err["type"], "loc": list(err["loc"]), "msg": err["msg"], "input": err.get("input")}
            for err in exc.errors()
        ]
        raise ConfigError(details) from exc


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(
            [{"type": "file_error", "loc": ["file"], "msg": str(exc), "input": str(path)}]
        ) from exc
    config = config_from_mapping(parse_config_text(text))
    logger.info("config loaded path=%s preset=%s eps=%s", path, config.init.preset, config.physics.sweep())
    return config
