"""Persistence: RLXF1 field files and CSV traces.

RLXF1 layout: one ASCII header line
`RLXF1 <dim> <nx> [ny] [nz] <components> <len_x> [len_y] [len_z]`
followed by little-endian float64 samples, row-major, component-fastest.
"""

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .config import settings
from .errors import FieldFormatError, OutputError
from .grid_spectral import Field, SpectralGrid, as_field
from .models import EnergyTrace

logger = logging.getLogger(__name__)

MAGIC = "RLXF1"


# --- Helpers ---


def ensure_dir(path: Path) -> Path:
    """Create `path` (and parents); unwritable locations raise OutputError."""
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError("cannot create output directory", {"path": str(path), "reason": str(exc)}) from exc
    if not path.is_dir():
        raise OutputError("output path is not a directory", {"path": str(path)})
    return path


def format_float(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, settings.CSV_FLOAT_FORMAT)


# --- Field files ---


def write_field(path: Path, field: Field) -> None:
    grid = field.grid
    if len(field.tail) > 1:
        raise FieldFormatError("RLXF1 stores scalar or vector fields only", {"tail": list(field.tail)})
    header = " ".join(
        [MAGIC, str(grid.dim), *(str(n) for n in grid.n), str(field.components)]
        + [repr(float(length)) for length in grid.lengths]
    )
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii") + b"\n")
            fh.write(payload)
    except OSError as exc:
        raise OutputError("cannot write field file", {"path": str(path), "reason": str(exc)}) from exc


def read_field(path: Path) -> Field:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FieldFormatError("cannot read field file", {"path": str(path)}) from exc
    newline = raw.find(b"\n")
    if newline < 0:
        raise FieldFormatError("missing header line", {"path": str(path)})
    tokens = raw[:newline].decode("ascii", errors="replace").split()
    if not tokens or tokens[0] != MAGIC:
        raise FieldFormatError("not an RLXF1 file", {"path": str(path)})
    try:
        dim = int(tokens[1])
        n = tuple(int(tok) for tok in tokens[2 : 2 + dim])
        components = int(tokens[2 + dim])
        lengths = tuple(float(tok) for tok in tokens[3 + dim : 3 + 2 * dim])
    except (IndexError, ValueError) as exc:
        raise FieldFormatError("malformed RLXF1 header", {"header": tokens}) from exc
    if len(tokens) != 3 + 2 * dim or len(lengths) != dim:
        raise FieldFormatError("malformed RLXF1 header", {"header": tokens})

    grid = SpectralGrid(dim=dim, n=n, lengths=lengths)
    expected = grid.npoints * components
    payload = raw[newline + 1 :]
    if len(payload) != 8 * expected:
        raise FieldFormatError(
            "payload size does not match header", {"expected": 8 * expected, "got": len(payload)}
        )
    values = np.frombuffer(payload, dtype="<f8")
    return as_field(grid, values.astype(np.float64).reshape(grid.shape + (components,)))


# --- CSV ---


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write a CSV with floats in round-trip precision; strings pass through."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [format_float(float(v)) if isinstance(v, int | float) and not isinstance(v, bool) else v for v in row]
                )
    except OSError as exc:
        raise OutputError("cannot write csv", {"path": str(path), "reason": str(exc)}) from exc


def write_trace(path: Path, trace: EnergyTrace) -> None:
    write_rows(path, trace.header, trace.rows)


def read_rows(path: Path) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise FieldFormatError("cannot read csv", {"path": str(path)}) from exc
