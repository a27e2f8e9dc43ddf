"""Periodic-domain field arithmetic.

Fields live on a uniform tensor grid over a flat torus. Samples are stored as
`grid.shape + tail` float64 arrays with the component axes last, so a 3-vector
field on a 64x64 grid has shape (64, 64, 3). All transforms are real FFTs over
the spatial axes only.

Norm convention: raw integrals over the torus, no volume normalisation.
"""

import logging
import math
from collections.abc import Sequence
from functools import lru_cache
from typing import Any, ClassVar

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field as PydField, field_validator, model_validator
from scipy import fft as sfft

from .config import settings
from .errors import GridMismatchError, UnsupportedOrderError

logger = logging.getLogger(__name__)

MAX_SOBOLEV_ORDER = 7
TWO_PI = 2.0 * math.pi

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]


class SpectralGrid(BaseModel):
    """Periodic box descriptor; hashable so wavenumber tables can be cached per grid."""

    model_config = ConfigDict(frozen=True)

    dim: int = PydField(ge=1, le=3)
    n: tuple[int, ...]
    lengths: tuple[float, ...]

    @field_validator("n")
    @classmethod
    def _n_even(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        for ni in v:
            if ni < 8 or ni % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {ni}")
        return v

    @field_validator("lengths")
    @classmethod
    def _lengths_positive(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not math.isfinite(li) or li <= 0 for li in v):
            raise ValueError("axis lengths must be finite and positive")
        return v

    @model_validator(mode="after")
    def _axes_agree(self) -> "SpectralGrid":
        if len(self.n) != self.dim or len(self.lengths) != self.dim:
            raise ValueError("n and lengths must have one entry per axis")
        return self

    @classmethod
    def create(
        cls,
        n: int | Sequence[int],
        dim: int | None = None,
        lengths: float | Sequence[float] | None = None,
    ) -> "SpectralGrid":
        """Build a grid; scalars broadcast over `dim` axes, lengths default to 2*pi."""
        if isinstance(n, int):
            dim = dim or 1
            n_axes = (n,) * dim
        else:
            n_axes = tuple(int(x) for x in n)
            dim = dim or len(n_axes)
        if lengths is None:
            len_axes = (TWO_PI,) * dim
        elif isinstance(lengths, int | float):
            len_axes = (float(lengths),) * dim
        else:
            len_axes = tuple(float(x) for x in lengths)
        return cls(dim=dim, n=n_axes, lengths=len_axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(self.dim))

    @property
    def npoints(self) -> int:
        return math.prod(self.n)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(li / ni for li, ni in zip(self.lengths, self.n, strict=True))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    @property
    def max_wavenumber(self) -> float:
        """Largest representable Euclidean |k| (the all-Nyquist corner)."""
        return math.sqrt(sum((math.pi * ni / li) ** 2 for ni, li in zip(self.n, self.lengths, strict=True)))

    def coordinates(self) -> tuple[FloatArray, ...]:
        axes = [np.arange(ni) * (li / ni) for ni, li in zip(self.n, self.lengths, strict=True)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


# --- Wavenumber tables (cached per grid) ---


def _mode_index(grid: SpectralGrid, axis: int) -> NDArray[np.int64]:
    """Signed integer mode numbers along `axis`, shaped to broadcast over the spectral array."""
    ni = grid.n[axis]
    if axis == grid.dim - 1:
        idx = np.arange(ni // 2 + 1)
    else:
        idx = np.rint(sfft.fftfreq(ni) * ni).astype(np.int64)
    shape = [1] * grid.dim
    shape[axis] = idx.size
    return idx.reshape(shape)


@lru_cache(maxsize=64)
def wavenumbers(grid: SpectralGrid, axis: int) -> FloatArray:
    """Full wavenumbers 2*pi*j/L along `axis`, Nyquist included."""
    return _mode_index(grid, axis) * (TWO_PI / grid.lengths[axis])


@lru_cache(maxsize=64)
def derivative_wavenumbers(grid: SpectralGrid, axis: int) -> FloatArray:
    """First-derivative weights: as `wavenumbers` but zero at the Nyquist mode."""
    idx = _mode_index(grid, axis)
    k = idx * (TWO_PI / grid.lengths[axis])
    return np.where(np.abs(idx) == grid.n[axis] // 2, 0.0, k)


@lru_cache(maxsize=32)
def k_squared(grid: SpectralGrid) -> FloatArray:
    """|k|^2 on the spectral shape; the Laplacian symbol is its negative."""
    total = np.zeros(grid.spectral_shape)
    for axis in grid.axes:
        total = total + wavenumbers(grid, axis) ** 2
    return total


@lru_cache(maxsize=32)
def _k_tilde_squared(grid: SpectralGrid) -> FloatArray:
    total = np.zeros(grid.spectral_shape)
    for axis in grid.axes:
        total = total + derivative_wavenumbers(grid, axis) ** 2
    return total


@lru_cache(maxsize=32)
def dealias_mask(grid: SpectralGrid) -> NDArray[np.bool_]:
    """2/3 rule: keep |j| <= N/3 on every axis."""
    mask = np.ones(grid.spectral_shape, dtype=bool)
    for axis in grid.axes:
        mask = mask & (np.abs(_mode_index(grid, axis)) <= grid.n[axis] // 3)
    return mask


@lru_cache(maxsize=32)
def _parseval_weights(grid: SpectralGrid) -> FloatArray:
    # rfft stores each conjugate pair once on the last axis, except j=0 and Nyquist
    last = np.full(grid.n[-1] // 2 + 1, 2.0)
    last[0] = 1.0
    last[-1] = 1.0
    shape = [1] * grid.dim
    shape[-1] = last.size
    return np.broadcast_to(last.reshape(shape), grid.spectral_shape)


def expand_modes(table: NDArray[Any], ntail: int) -> NDArray[Any]:
    """Append singleton axes so a spectral table broadcasts over component axes."""
    return table.reshape(table.shape + (1,) * ntail)


def forward(grid: SpectralGrid, values: FloatArray) -> ComplexArray:
    return sfft.rfftn(values, axes=grid.axes, workers=settings.FFT_WORKERS)


def inverse(grid: SpectralGrid, spectrum: ComplexArray) -> FloatArray:
    return sfft.irfftn(spectrum, s=grid.shape, axes=grid.axes, workers=settings.FFT_WORKERS)


# --- Fields ---


class Field(BaseModel):
    """Immutable grid sample. `band_limit` records a known spectral support radius."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tail_shape: ClassVar[tuple[int, ...] | None] = None

    grid: SpectralGrid
    values: np.ndarray
    band_limit: float | None = None

    @model_validator(mode="before")
    @classmethod
    def _coerce_values(cls, data: Any) -> Any:
        if isinstance(data, dict) and "values" in data:
            arr = np.array(data["values"], dtype=np.float64, copy=True)
            grid = data.get("grid")
            if cls.tail_shape == (1,) and isinstance(grid, SpectralGrid) and arr.ndim == grid.dim:
                arr = arr[..., np.newaxis]
            arr.setflags(write=False)
            data = {**data, "values": arr}
        return data

    @model_validator(mode="after")
    def _check_shape(self) -> "Field":
        spatial = self.values.shape[: self.grid.dim]
        if spatial != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if self.tail_shape is not None and self.tail != self.tail_shape:
            raise ValueError(f"expected component shape {self.tail_shape}, got {self.tail}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        return self

    @property
    def tail(self) -> tuple[int, ...]:
        return tuple(self.values.shape[self.grid.dim :])

    @property
    def components(self) -> int:
        return math.prod(self.tail)


class ScalarField(Field):
    tail_shape: ClassVar[tuple[int, ...] | None] = (1,)

    @property
    def scalar(self) -> FloatArray:
        """Values without the trailing component axis."""
        return self.values[..., 0]


class VectorField(Field):
    tail_shape: ClassVar[tuple[int, ...] | None] = (3,)


def as_field(grid: SpectralGrid, values: FloatArray, band_limit: float | None = None) -> Field:
    """Wrap raw values in the most specific plain field class for their component shape."""
    tail = tuple(values.shape[grid.dim :])
    if tail == (3,):
        return VectorField(grid=grid, values=values, band_limit=band_limit)
    if tail == (1,):
        return ScalarField(grid=grid, values=values, band_limit=band_limit)
    return Field(grid=grid, values=values, band_limit=band_limit)


def require_same_grid(*fields: Field) -> SpectralGrid:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatchError(
                "fields live on different grids",
                {"expected": grid.model_dump(), "got": other.grid.model_dump()},
            )
    return grid


# --- Array-level kernels (used by the solvers) ---


def gradient_array(grid: SpectralGrid, values: FloatArray) -> FloatArray:
    ntail = values.ndim - grid.dim
    spectrum = forward(grid, values)
    parts = [
        inverse(grid, 1j * expand_modes(derivative_wavenumbers(grid, axis), ntail) * spectrum)
        for axis in grid.axes
    ]
    return np.stack(parts, axis=-1)


def laplacian_array(grid: SpectralGrid, values: FloatArray) -> FloatArray:
    ntail = values.ndim - grid.dim
    return inverse(grid, -expand_modes(k_squared(grid), ntail) * forward(grid, values))


def dealias_array(grid: SpectralGrid, values: FloatArray) -> FloatArray:
    ntail = values.ndim - grid.dim
    return inverse(grid, expand_modes(dealias_mask(grid), ntail) * forward(grid, values))


def order_norms(grid: SpectralGrid, values: FloatArray, k: int) -> list[float]:
    """|nabla^gamma f|_{L2} for gamma = 0..k.

    Order 0 uses the physical quadrature; higher orders use Parseval with the
    derivative wavenumbers, which equals the Frobenius norm of the iterated
    spectral gradient.
    """
    norms = [math.sqrt(grid.cell_volume * float(np.sum(values * values)))]
    if k == 0:
        return norms
    ntail = values.ndim - grid.dim
    power = np.abs(forward(grid, values)) ** 2
    if ntail:
        power = power.sum(axis=tuple(range(grid.dim, values.ndim)))
    power = power * _parseval_weights(grid)
    k2 = _k_tilde_squared(grid)
    scale = grid.cell_volume / grid.npoints
    weight = np.ones_like(k2)
    for _ in range(k):
        weight = weight * k2
        norms.append(math.sqrt(scale * float(np.sum(weight * power))))
    return norms


def sobolev_norm_array(grid: SpectralGrid, values: FloatArray, k: int, homogeneous: bool = False) -> float:
    if not 0 <= k <= MAX_SOBOLEV_ORDER:
        raise UnsupportedOrderError(
            f"Sobolev order must be in [0, {MAX_SOBOLEV_ORDER}]", {"k": k}
        )
    norms = order_norms(grid, values, k)
    return float(sum(norms[1:] if homogeneous else norms))


# --- Field-level operations ---


def gradient(f: Field) -> Field:
    """Spectral gradient; the derivative axis is appended after the component axes."""
    return Field(grid=f.grid, values=gradient_array(f.grid, f.values), band_limit=f.band_limit)


def iterated_gradient(f: Field, order: int) -> Field:
    values = f.values
    for _ in range(order):
        values = gradient_array(f.grid, values)
    return as_field(f.grid, values, f.band_limit)


def laplacian(f: Field) -> Field:
    return as_field(f.grid, laplacian_array(f.grid, f.values), f.band_limit)


def dealias(f: Field) -> Field:
    return as_field(f.grid, dealias_array(f.grid, f.values))


def l2_norm(f: Field) -> float:
    return order_norms(f.grid, f.values, 0)[0]


def spectral_l2_norm(f: Field) -> float:
    """L2 norm from the Fourier side; agrees with `l2_norm` by Parseval."""
    grid = f.grid
    power = np.abs(forward(grid, f.values)) ** 2
    if f.tail:
        power = power.sum(axis=tuple(range(grid.dim, f.values.ndim)))
    total = float(np.sum(power * _parseval_weights(grid)))
    return math.sqrt(grid.cell_volume / grid.npoints * total)


def sobolev_norm(f: Field, k: int, homogeneous: bool = False) -> float:
    """Sum over gamma <= k of |nabla^gamma f|_{L2}; the homogeneous form starts at gamma = 1."""
    return sobolev_norm_array(f.grid, f.values, k, homogeneous)


def mollify(f: Field, eta: float) -> Field:
    """Sharp Fourier cutoff keeping |k| <= 1/eta.

    The result remembers its cutoff, so applying the same cutoff again returns
    it untouched.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    cutoff = 1.0 / eta
    if cutoff >= f.grid.max_wavenumber:
        return f
    if f.band_limit is not None and f.band_limit <= cutoff:
        return f
    grid = f.grid
    mask = np.sqrt(k_squared(grid)) <= cutoff
    ntail = f.values.ndim - grid.dim
    values = inverse(grid, expand_modes(mask, ntail) * forward(grid, f.values))
    return as_field(grid, values, band_limit=cutoff)


def random_band_limited_field(
    grid: SpectralGrid,
    rng: np.random.Generator,
    components: int = 3,
    max_mode: int = 4,
    amplitude: float = 1.0,
) -> Field:
    """Smooth random field with modes |j| <= max_mode per axis, scaled to max |f| = amplitude."""
    shape = grid.spectral_shape + (components,)
    spectrum = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for axis in grid.axes:
        keep = keep & (np.abs(_mode_index(grid, axis)) <= max_mode)
    values = inverse(grid, spectrum * keep[..., np.newaxis])
    peak = float(np.max(np.abs(values)))
    if peak > 0:
        values = values * (amplitude / peak)
    return as_field(grid, values)
