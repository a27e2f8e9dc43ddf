# Pydantic schemas shared by the solvers, the harness and the CLI.
# Numeric field containers live in grid_spectral/geometry; this module holds
# configuration sections and tabular results.

import math
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

Preset = Literal["constant", "equator", "twisted"]
Theta1Mode = Literal["explicit", "well_prepared", "zero"]


def _split_list(value: object) -> object:
    """Accept `64, 64` style strings for list-valued keys."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, int | float):
        return [value]
    return value


IntList = Annotated[tuple[int, ...], BeforeValidator(_split_list)]
FloatList = Annotated[tuple[float, ...], BeforeValidator(_split_list)]


class EnergyTrace(BaseModel):
    """Rectangular time series; first column is always `t`."""

    model_config = ConfigDict(frozen=True)

    header: tuple[str, ...]
    rows: list[tuple[float, ...]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _rectangular(self) -> "EnergyTrace":
        if not self.header or self.header[0] != "t":
            raise ValueError("trace header must start with 't'")
        width = len(self.header)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"trace row has {len(row)} values, header has {width}")
        return self

    def column(self, name: str) -> np.ndarray:
        idx = self.header.index(name)
        return np.array([row[idx] for row in self.rows], dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def __len__(self) -> int:
        return len(self.rows)


# --- Experiment configuration ---


class DomainSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(default=1, ge=1, le=3)
    n: IntList = (64,)
    lengths: FloatList | None = None

    @model_validator(mode="after")
    def _broadcast(self) -> "DomainSection":
        if len(self.n) == 1 and self.dim > 1:
            self.n = self.n * self.dim
        if self.lengths is not None and len(self.lengths) == 1 and self.dim > 1:
            self.lengths = self.lengths * self.dim
        if len(self.n) != self.dim:
            raise ValueError("domain.n needs one entry per axis")
        if any(n < 8 or n % 2 for n in self.n):
            raise ValueError("domain.n entries must be even and >= 8")
        if self.lengths is not None and len(self.lengths) != self.dim:
            raise ValueError("domain.lengths needs one entry per axis")
        return self


class TimeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_final: float = Field(gt=0)
    dt: float = Field(default=1e-3, gt=0)
    stride: int = Field(default=10, ge=1)
    probe_dt: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _probe_multiple(self) -> "TimeSection":
        if self.probe_dt is not None:
            ratio = self.probe_dt / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
                raise ValueError("time.probe_dt must be a positive multiple of time.dt")
        return self

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def probe_steps(self) -> int | None:
        return None if self.probe_dt is None else int(round(self.probe_dt / self.dt))


class PhysicsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps: float | None = None
    eps_list: FloatList | None = None

    @model_validator(mode="after")
    def _eps_range(self) -> "PhysicsSection":
        values = list(self.eps_list or ()) + ([self.eps] if self.eps is not None else [])
        if not values:
            raise ValueError("set physics.eps or physics.eps_list")
        for value in values:
            if not 0.0 < value < 0.5:
                raise ValueError(f"eps values must lie in (0, 1/2), got {value}")
        if self.eps_list is not None and len(set(self.eps_list)) != len(self.eps_list):
            raise ValueError("physics.eps_list entries must be distinct")
        return self

    def sweep(self) -> tuple[float, ...]:
        """eps values in decreasing order."""
        values = self.eps_list if self.eps_list is not None else (self.eps,)
        return tuple(sorted((float(v) for v in values if v is not None), reverse=True))


class InitSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Preset = "equator"
    amplitude: float = 0.1  # theta0 = amplitude * sin(wavenumber x)
    wavenumber: int = Field(default=1, ge=0)
    twist: float = 0.5  # second-axis amplitude of the twisted preset
    theta1: Theta1Mode = "explicit"
    theta1_amplitude: float = 0.1


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: Path | None = None
    snapshots: bool = False


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run_heat: bool = True
    run_wave: bool = True
    run_remainder_diagnostics: bool = True
    run_decomposition_check: bool = False
    seed: int = 0
    workers: int | None = Field(default=None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainSection = Field(default_factory=DomainSection)
    time: TimeSection
    physics: PhysicsSection
    init: InitSection = Field(default_factory=InitSection)
    output: OutputSection = Field(default_factory=OutputSection)
    run: RunSection = Field(default_factory=RunSection)

    @model_validator(mode="after")
    def _preset_dims(self) -> "ExperimentConfig":
        if self.init.preset == "twisted" and self.domain.dim < 2:
            raise ValueError("the twisted preset needs domain.dim >= 2")
        return self
