"""
Configuration for seqdisc.

Numerical tolerances and solver options are frozen pydantic models with
module-level defaults. Process-wide settings (dimension caps, worker count,
logging) come from the environment, optionally seeded from a ``.env`` file.
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidInputError


class ToleranceConfig(BaseModel):
    """Tolerances used by rank, PSD and subspace decisions."""

    model_config = ConfigDict(frozen=True)

    rank_tol: float = Field(1e-9, ge=0.0, description="relative eigen/singular value cutoff")
    psd_tol: float = Field(1e-8, ge=0.0)
    subspace_eq_tol: float = Field(1e-8, ge=0.0)
    hermiticity_tol: float = Field(1e-12, ge=0.0)
    prior_tol: float = Field(1e-10, ge=0.0)
    trace_tol: float = Field(1e-10, ge=0.0)
    completeness_tol: float = Field(1e-9, ge=0.0)


class SolverOptions(BaseModel):
    """Options of the interior-point SDP engine."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(200, ge=1)
    gap_tol: float = Field(1e-7, gt=0.0)
    feas_tol: float = Field(1e-8, gt=0.0)
    step_fraction: float = Field(0.95, gt=0.0, lt=1.0)
    init_scale: float = Field(1.0, gt=0.0)
    divergence_threshold: float = Field(1e10, gt=0.0)


class Settings(BaseModel):
    """Process-wide settings read from the environment."""

    model_config = ConfigDict(frozen=True)

    dim_cap: int = Field(4096, ge=1)
    direct_cap: int = Field(64, ge=1)
    max_workers: int = Field(4, ge=1)
    log_file: Optional[str] = None
    log_level: str = "INFO"


DEFAULT_TOLERANCES = ToleranceConfig()
DEFAULT_SOLVER_OPTIONS = SolverOptions()


def _env_int(name: str) -> Optional[int]:
    raw = os.environ.get(name)
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInputError(f"{name} must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidInputError(f"{name} must be a positive integer, got {value}")
    return value


def load_settings() -> Settings:
    """
    Build settings from the environment.

    :return: Settings with environment overrides applied.
    :raises InvalidInputError: if a numeric variable is not a positive integer.
    """
    load_dotenv()
    values = {}
    for field, env_name in (("dim_cap", "SEQDISC_DIM_CAP"),
                            ("direct_cap", "SEQDISC_DIRECT_CAP"),
                            ("max_workers", "SEQDISC_MAX_WORKERS")):
        value = _env_int(env_name)
        if value is not None:
            values[field] = value
    if os.environ.get("SEQDISC_LOG_FILE"):
        values["log_file"] = os.environ["SEQDISC_LOG_FILE"]
    if os.environ.get("SEQDISC_LOG_LEVEL"):
        values["log_level"] = os.environ["SEQDISC_LOG_LEVEL"]
    return Settings(**values)


def current_dim_cap() -> int:
    """Kronecker/materialization cap, honouring ``SEQDISC_DIM_CAP``."""
    value = _env_int("SEQDISC_DIM_CAP")
    return Settings().dim_cap if value is None else value
