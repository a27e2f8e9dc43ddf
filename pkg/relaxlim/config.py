from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Logging / diagnostics
    LOG_LEVEL: str = "INFO"

    # Where `run` and `sweep` write when the config does not name a directory
    OUTPUT_DIR: Path = Path("./runs")

    # Parallelism: both off by default so outputs are byte-identical across machines
    FFT_WORKERS: int = 1  # scipy.fft workers per transform
    SWEEP_WORKERS: int = 1  # processes for per-eps runs

    # Numerics
    DEALIAS: bool = True  # 2/3 truncation of nonlinear terms inside the solvers
    UNIT_TOLERANCE: float = 1e-8  # max ||d|-1| after a step
    TANGENCY_TOLERANCE: float = 1e-8  # max |d.v| in traces, max |d_in.D| for layer data
    COMPATIBILITY_TOLERANCE: float = 1e-8  # max |d_in.dtilde_in| accepted
    DEGENERATE_NORM: float = 1e-12  # smallest |v| project_to_sphere accepts
    ENERGY_MONOTONE_TOLERANCE: float = 1e-10  # per-step Dirichlet energy slack, times (1+E0)

    # Reports
    CSV_FLOAT_FORMAT: str = ".17g"

    # Pydantic v2 settings config
    model_config = SettingsConfigDict(
        env_prefix="RELAXLIM_",
        env_file=".env",
        env_file_encoding="utf-8",
    )


settings = Settings()
