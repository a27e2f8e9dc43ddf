"""Pointwise unit-sphere constraint handling for director and tangent fields."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import settings
from .errors import DegeneratePointError
from .grid_spectral import FloatArray, Field, VectorField, require_same_grid

logger = logging.getLogger(__name__)


class DirectorField(VectorField):
    """Map into R^3 meant to satisfy |d| = 1 at every grid point."""


class TangentField(VectorField):
    """Vector field with d.v = 0 against `anchor` (when one is attached)."""

    anchor: DirectorField | None = None


class ConstraintReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_norm_violation: float
    max_orthogonality_violation: float = 0.0


# --- Array kernels ---


def dot(a: FloatArray, b: FloatArray) -> FloatArray:
    """Pointwise inner product over the trailing component axis."""
    return np.einsum("...c,...c->...", a, b)


def normalize_array(values: FloatArray, min_norm: float | None = None) -> FloatArray:
    floor = settings.DEGENERATE_NORM if min_norm is None else min_norm
    norms = np.linalg.norm(values, axis=-1)
    worst = int(np.argmin(norms))
    if norms.flat[worst] < floor:
        index = tuple(int(i) for i in np.unravel_index(worst, norms.shape))
        raise DegeneratePointError(index, float(norms.flat[worst]))
    return values / norms[..., np.newaxis]


def tangent_array(d: FloatArray, v: FloatArray) -> FloatArray:
    return v - dot(d, v)[..., np.newaxis] * d


def norm_violation(d: FloatArray) -> float:
    return float(np.max(np.abs(np.linalg.norm(d, axis=-1) - 1.0)))


def orthogonality_violation(d: FloatArray, v: FloatArray) -> float:
    return float(np.max(np.abs(dot(d, v))))


# --- Field operations ---


def project_to_sphere(v: Field) -> DirectorField:
    return DirectorField(grid=v.grid, values=normalize_array(v.values))


def project_to_tangent(d: DirectorField, v: Field) -> TangentField:
    require_same_grid(d, v)
    return TangentField(grid=d.grid, values=tangent_array(d.values, v.values), anchor=d)


def constraint_report(d: Field, v: Field | None = None) -> ConstraintReport:
    """max ||d|-1| and, when v is given, max |d.v| over the grid."""
    if v is None:
        return ConstraintReport(max_norm_violation=norm_violation(d.values))
    require_same_grid(d, v)
    return ConstraintReport(
        max_norm_violation=norm_violation(d.values),
        max_orthogonality_violation=orthogonality_violation(d.values, v.values),
    )
