# tests/conftest.py
# PURPOSE: shared grids, initial data and a config-file writer for the numerical tests.

# Ensure project root is on sys.path so `import relaxlim` works when running pytest.
import os
import sys

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import math
import textwrap
import numpy as np
import pytest

from relaxlim.grid_spectral import SpectralGrid
from relaxlim.scalar_oracle import lift_to_equator


@pytest.fixture()
def grid32():
    return SpectralGrid.create(n=32)


@pytest.fixture()
def grid2d():
    return SpectralGrid.create(n=16, dim=2)


@pytest.fixture()
def x32(grid32):
    return grid32.coordinates()[0]


@pytest.fixture()
def equator_data(grid32, x32):
    """(d_in, dtilde_in, theta0, theta1) for theta0 = 0.3 sin x, theta1 = 0.2 sin x."""
    from relaxlim.grid_spectral import VectorField

    theta0 = 0.3 * np.sin(x32)
    theta1 = 0.2 * np.sin(x32)
    d_in = lift_to_equator(theta0, grid32)
    tangent = np.stack([-np.sin(theta0), np.cos(theta0), np.zeros_like(theta0)], axis=-1)
    dtilde = VectorField(grid=grid32, values=theta1[:, None] * tangent)
    return d_in, dtilde, theta0, theta1


@pytest.fixture()
def write_config(tmp_path):
    """Write a config file from a dedented string and return its path."""

    def _write(text: str, name: str = "experiment.cfg"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return path

    return _write


@pytest.fixture()
def tangent_of():
    def _tangent(theta):
        return np.stack([-np.sin(theta), np.cos(theta), np.zeros_like(theta)], axis=-1)

    return _tangent


SQRT_PI = math.sqrt(math.pi)
