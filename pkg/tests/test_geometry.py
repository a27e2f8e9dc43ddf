import numpy as np
import pytest

from relaxlim.errors import DegeneratePointError
from relaxlim.geometry import (
    DirectorField,
    constraint_report,
    project_to_sphere,
    project_to_tangent,
)
from relaxlim.grid_spectral import VectorField, random_band_limited_field


def test_project_to_sphere_normalises(grid2d):
    raw = random_band_limited_field(grid2d, np.random.default_rng(1))
    shifted = VectorField(grid=grid2d, values=raw.values + np.array([0.0, 0.0, 3.0]))
    d = project_to_sphere(shifted)
    assert isinstance(d, DirectorField)
    assert constraint_report(d).max_norm_violation < 1e-14


def test_project_to_sphere_reports_worst_point(grid32):
    values = np.ones((32, 3))
    values[5] = 0.0
    with pytest.raises(DegeneratePointError) as info:
        project_to_sphere(VectorField(grid=grid32, values=values))
    assert info.value.worst_index == (5,)
    assert info.value.norm == 0.0
    assert "degenerate_point" in info.value.render()


def test_project_to_tangent(grid2d):
    rng = np.random.default_rng(3)
    d = project_to_sphere(
        VectorField(
            grid=grid2d,
            values=random_band_limited_field(grid2d, rng).values + np.array([2.0, 0.0, 0.0]),
        )
    )
    v = random_band_limited_field(grid2d, rng)
    tangent = project_to_tangent(d, v)
    assert tangent.anchor is d
    report = constraint_report(d, tangent)
    assert report.max_orthogonality_violation < 1e-14
    # projecting twice changes nothing
    np.testing.assert_allclose(project_to_tangent(d, tangent).values, tangent.values, atol=1e-15)


def test_project_to_sphere_is_idempotent(grid2d):
    raw = random_band_limited_field(grid2d, np.random.default_rng(4))
    d = project_to_sphere(VectorField(grid=grid2d, values=raw.values + np.array([0.0, 2.5, 0.0])))
    again = project_to_sphere(d)
    np.testing.assert_allclose(again.values, d.values, atol=1e-15)


def test_tangent_projection_never_lengthens(grid2d):
    rng = np.random.default_rng(8)
    d = project_to_sphere(
        VectorField(
            grid=grid2d,
            values=random_band_limited_field(grid2d, rng).values + np.array([0.0, 0.0, 2.0]),
        )
    )
    v = VectorField(grid=grid2d, values=rng.standard_normal((16, 16, 3)))
    tangent = project_to_tangent(d, v)
    lengths = np.linalg.norm(tangent.values, axis=-1)
    assert np.all(lengths <= np.linalg.norm(v.values, axis=-1) * (1.0 + 1e-14))
    # a vector along d loses everything
    along = project_to_tangent(d, VectorField(grid=grid2d, values=3.0 * d.values))
    assert np.max(np.abs(along.values)) < 1e-14
