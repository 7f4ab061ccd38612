"""Configuration functions and constants for the Elliptrack application."""

import json
import math
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

# Scenario defaults: 340 m x 80 m ellipse at 50 km/h, Poisson rate 20
DEFAULT_SEMI_AXES = (170.0, 40.0)
DEFAULT_SPEED = 13.88888888888889  # 50 km/h
DEFAULT_POISSON_RATE = 20.0
DEFAULT_NUM_STEPS = 104
DEFAULT_DT = 10.0
DEFAULT_RNG_SEED = 20220401

# (kind, steps, total turn angle in rad)
DEFAULT_SEGMENT_PLAN = [
    ("straight", 22, 0.0),
    ("turn", 10, math.pi / 2),
    ("straight", 20, 0.0),
    ("turn", 10, math.pi / 2),
    ("straight", 20, 0.0),
    ("turn", 10, math.pi / 2),
    ("straight", 12, 0.0),
]

# Sensor noise C_v (m^2) and multiplicative noise C_h (filled unit disk)
DEFAULT_MEASUREMENT_NOISE = [[200.0**2 / 4.0, 0.0], [0.0, 80.0**2 / 4.0]]
DEFAULT_MULTIPLICATIVE_NOISE = [[0.25, 0.0], [0.0, 0.25]]

# Prediction: white-noise jerk PSD and per-scan shape random walk
DEFAULT_JERK_PSD = 1e-3
DEFAULT_SHAPE_PROCESS_NOISE = [
    [0.01, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
]

# Diagonal of the initial covariances used by track initialization
DEFAULT_INITIAL_KINEMATIC_COV = [900.0, 900.0, 400.0, 400.0, 4.0, 4.0]
DEFAULT_INITIAL_SHAPE_COV = [0.02, 900.0, 225.0]

# Shape covariance is kept below (clamp_factor * semi-axis)^2
DEFAULT_CLAMP_FACTOR = 0.4

# Chi-square 95% quantile with two degrees of freedom
CONFIDENCE_SCALE_95 = 5.991

# Semi-axes never drop below this after an update (m)
MIN_SEMI_AXIS = 0.1

# Tracker identifiers accepted on the command line
KNOWN_TRACKERS = ["ekf_star", "eif_yl", "eif_y0"]


def get_seed_override() -> Optional[int]:
    """Get the RNG seed override from environment variable"""
    raw = os.getenv("ELLIPTRACK_SEED")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"ELLIPTRACK_SEED must be an integer, got {raw!r}")


def get_default_workers() -> int:
    """Get the Monte Carlo worker count from environment variable"""
    raw = os.getenv("ELLIPTRACK_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"ELLIPTRACK_WORKERS must be an integer, got {raw!r}")
    if workers < 1:
        raise ConfigError(f"ELLIPTRACK_WORKERS must be >= 1, got {workers}")
    return workers


class SegmentModel(BaseModel):
    """One straight or coordinated-turn segment of the reference path."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["straight", "turn"]
    steps: int = Field(ge=1)
    angle: float = 0.0


class ExperimentFile(BaseModel):
    """
    Flat experiment configuration as stored in a YAML file. Every key is
    optional and falls back to the module defaults above.
    """

    model_config = ConfigDict(extra="forbid")

    semi_axes: Tuple[float, float] = DEFAULT_SEMI_AXES
    speed: float = Field(DEFAULT_SPEED, ge=0.0)
    poisson_rate: float = Field(DEFAULT_POISSON_RATE, gt=0.0)
    num_steps: int = Field(DEFAULT_NUM_STEPS, ge=1)
    dt: float = Field(DEFAULT_DT, gt=0.0)
    segment_plan: Optional[List[SegmentModel]] = None
    measurement_noise: List[List[float]] = DEFAULT_MEASUREMENT_NOISE
    multiplicative_noise: List[List[float]] = DEFAULT_MULTIPLICATIVE_NOISE
    rng_seed: int = DEFAULT_RNG_SEED
    jerk_psd: float = Field(DEFAULT_JERK_PSD, ge=0.0)
    shape_process_noise: List[List[float]] = DEFAULT_SHAPE_PROCESS_NOISE
    initial_kinematic_cov: List[float] = DEFAULT_INITIAL_KINEMATIC_COV
    initial_shape_cov: List[float] = DEFAULT_INITIAL_SHAPE_COV
    clamp_factor: float = Field(DEFAULT_CLAMP_FACTOR, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_shapes(self):
        if min(self.semi_axes) <= 0:
            raise ValueError("semi_axes must be positive")
        for name, size in (
            ("measurement_noise", 2),
            ("multiplicative_noise", 2),
            ("shape_process_noise", 3),
        ):
            matrix = getattr(self, name)
            if len(matrix) != size or any(len(row) != size for row in matrix):
                raise ValueError(f"{name} must be a {size}x{size} matrix")
        if len(self.initial_kinematic_cov) != 6:
            raise ValueError("initial_kinematic_cov needs 6 diagonal entries")
        if len(self.initial_shape_cov) != 3:
            raise ValueError("initial_shape_cov needs 3 diagonal entries")
        if min(self.initial_kinematic_cov + self.initial_shape_cov) <= 0:
            raise ValueError("initial covariance diagonals must be positive")
        if self.segment_plan is None:
            self.segment_plan = [
                SegmentModel(kind=kind, steps=steps, angle=angle)
                for kind, steps, angle in DEFAULT_SEGMENT_PLAN
            ]
        planned = sum(segment.steps for segment in self.segment_plan)
        if planned != self.num_steps:
            raise ValueError(
                f"segment_plan covers {planned} steps, num_steps is "
                f"{self.num_steps}"
            )
        return self

    def canonical_text(self) -> str:
        """Sorted-key JSON used to fingerprint the configuration."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)


def load_experiment(path: Optional[str] = None) -> ExperimentFile:
    """
    Load and validate an experiment file, applying environment overrides.

    Args:
        path: YAML file to read; None means all defaults

    Raises:
        ConfigError: If the file is unreadable, malformed or invalid
    """
    data = {}
    if path is not None:
        config_path = Path(path)
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {str(e)}")
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid YAML: {str(e)}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a mapping")

    seed = get_seed_override()
    if seed is not None:
        data["rng_seed"] = seed

    try:
        return ExperimentFile(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {str(e)}")
