"""Configuration management for kornlab.

User defaults live in a TOML file; a run can also be described completely by
an ExperimentConfig JSON file passed through ``--config``.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from kornlab.models import ExponentParams, RoomsSpec


class RunConfig(BaseModel):
    """Reproducibility and output settings."""

    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)
    out_dir: str = "."


class ResolutionConfig(BaseModel):
    """Default discretization policy."""

    min_level: int = Field(default=6, ge=0)
    h: float = Field(default=1 / 64, gt=0)
    cells_across: int = Field(default=16, ge=8)


class CLIConfig(BaseModel):
    """CLI output configuration."""

    output_format: str = "table"  # table | json
    color: bool = True


class LabConfig(BaseModel):
    """Root configuration model."""

    run: RunConfig = Field(default_factory=RunConfig)
    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)
    cli: CLIConfig = Field(default_factory=CLIConfig)


class ExperimentConfig(BaseModel):
    """One experiment, as read from ``--config file.json``."""

    model_config = ConfigDict(extra="forbid")

    command: Literal[
        "geom whitney",
        "qhyp dist",
        "qhyp classify",
        "gallery rooms",
        "fields eval-example",
        "scaling predict",
        "scaling measure",
        "divsolve run",
        "constants estimate",
        "constants blowup",
        "constants pipeline",
    ]
    domain: dict[str, Any] | None = None
    rooms: RoomsSpec | None = None
    params: ExponentParams = Field(default_factory=ExponentParams)
    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)
    options: dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)
    out_dir: str = "."
    expect: Literal["holds", "fails"] | None = None


def get_config_dir() -> Path:
    """Get the kornlab config directory path."""
    # Check XDG_CONFIG_HOME first, then fall back to ~/.kornlab
    xdg_config = os.environ.get("XDG_CONFIG_HOME")
    if xdg_config:
        return Path(xdg_config) / "kornlab"
    return Path.home() / ".kornlab"


def get_config_path() -> Path:
    return get_config_dir() / "config.toml"


def load_config() -> LabConfig:
    """Load configuration from file or return defaults, then apply the environment."""
    config_path = get_config_path()
    config = LabConfig()
    if config_path.exists():
        with open(config_path, "rb") as f:
            data = tomllib.load(f)
        config = LabConfig(**data)

    # Environment variables take precedence
    run = config.run.model_dump()
    if os.environ.get("KORNLAB_SEED"):
        run["seed"] = int(os.environ["KORNLAB_SEED"])
    if os.environ.get("KORNLAB_THREADS"):
        run["threads"] = int(os.environ["KORNLAB_THREADS"])
    if os.environ.get("KORNLAB_OUT_DIR"):
        run["out_dir"] = os.environ["KORNLAB_OUT_DIR"]
    config.run = RunConfig(**run)
    return config


def save_config(config: LabConfig) -> None:
    """Save configuration to file."""
    config_dir = get_config_dir()
    config_dir.mkdir(parents=True, exist_ok=True)
    with open(get_config_path(), "wb") as f:
        tomli_w.dump(config.model_dump(), f)


def load_experiment(path: Path) -> ExperimentConfig:
    """Parse an experiment file; unknown keys raise pydantic.ValidationError."""
    return ExperimentConfig.model_validate_json(path.read_text())
