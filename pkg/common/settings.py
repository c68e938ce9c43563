# common/settings.py
from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from common.errors import ConfigError

LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


class RunConfig(BaseSettings):
    # -------- Sampling ----------
    grid_density: int = Field(2048, alias="NONDEG_GRID_DENSITY")            # samples per unit duration
    samples_per_turn: int = Field(128, alias="NONDEG_SAMPLES_PER_TURN")     # fit samples per twist traversal in wires

    # -------- Tolerances ----------
    margin_tol: float = Field(1e-3, alias="NONDEG_MARGIN_TOL")
    delta: float = Field(0.05, alias="NONDEG_DELTA")
    frame_tol: float = Field(1e-6, alias="NONDEG_FRAME_TOL")

    # -------- Numerics ----------
    fd_step: float = Field(1e-4, alias="NONDEG_FD_STEP")
    geodesic_steps: int = Field(64, alias="NONDEG_GEODESIC_STEPS")
    n_max: int = Field(256, alias="NONDEG_N_MAX")
    seed: int = Field(0, alias="NONDEG_SEED")

    # -------- Output / logging ----------
    output_dir: str = Field("./out", alias="NONDEG_OUTPUT_DIR")
    log_level: str = Field("INFO", alias="NONDEG_LOG_LEVEL")
    log_json: bool = Field(False, alias="NONDEG_LOG_JSON")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    @field_validator("grid_density", "samples_per_turn", "geodesic_steps")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("margin_tol", "delta", "frame_tol", "fd_step")
    @classmethod
    def _positive_real(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("n_max")
    @classmethod
    def _n_max_at_least_two(cls, v: int) -> int:
        if v < 2:
            raise ValueError("NONDEG_N_MAX must be >= 2")
        return v

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        v = str(v).upper()
        if v not in LOG_LEVELS:
            raise ValueError(f"NONDEG_LOG_LEVEL must be one of {sorted(LOG_LEVELS)}")
        return v

    def echo(self) -> dict:
        """Config as echoed into reports (field names, not env aliases)."""
        return self.model_dump(mode="json")


def load_run_config(path: Optional[str | Path] = None, **overrides: Any) -> RunConfig:
    """
    Build a RunConfig with precedence:
      explicit overrides > JSON file (path or NONDEG_CONFIG) > environment / .env > defaults.
    Overrides set to None are treated as "not given".
    """
    data: dict[str, Any] = {}
    src = path or os.getenv("NONDEG_CONFIG")
    if src:
        p = Path(src)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config file {p}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {p} is not valid JSON: line {e.lineno} column {e.colno}: {e.msg}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")

    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def _pretty_fail(msg: str) -> None:
    print(f"\n[settings] {msg}\n", file=sys.stderr)
    sys.exit(3)


try:
    settings = RunConfig()
except Exception as e:
    _pretty_fail(
        "Invalid NONDEG_* settings in the environment or .env. Examples:\n"
        "  NONDEG_GRID_DENSITY=2048\n"
        "  NONDEG_MARGIN_TOL=1e-3\n"
        "  NONDEG_DELTA=0.05\n"
        "  NONDEG_N_MAX=256\n\n"
        f"Raw error: {e}"
    )

_current: RunConfig = settings


def get_settings() -> RunConfig:
    return _current


def set_settings(cfg: RunConfig) -> RunConfig:
    """Replace the process-wide config; returns the previous one."""
    global _current
    prev, _current = _current, cfg
    return prev
