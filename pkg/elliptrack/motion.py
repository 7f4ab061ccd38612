"""
Time prediction between scans: constant-acceleration kinematics driven by
white-noise jerk, and a random walk on the shape parameters.

The kinematic state is ordered (x, y, vx, vy, ax, ay).
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_DT, DEFAULT_JERK_PSD, DEFAULT_SHAPE_PROCESS_NOISE
from .errors import ContractViolation
from .filters_core import GaussianState
from .helpers import as_matrix, check_psd, symmetrize
from .memekf_star import TrackState


@dataclass(frozen=True, eq=False)
class MotionConfig:
    dt: float = DEFAULT_DT
    jerk_psd: float = DEFAULT_JERK_PSD
    shape_process_noise: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_SHAPE_PROCESS_NOISE)
    )

    def __post_init__(self):
        if not self.dt > 0:
            raise ContractViolation(f"dt must be positive, got {self.dt}")
        if self.jerk_psd < 0:
            raise ContractViolation(
                f"jerk_psd must be non-negative, got {self.jerk_psd}"
            )
        object.__setattr__(
            self,
            "shape_process_noise",
            check_psd(
                as_matrix(self.shape_process_noise, "shape_process_noise", (3, 3)),
                "shape_process_noise",
            ),
        )


def _per_axis(block: np.ndarray) -> np.ndarray:
    # x and y share the same 3x3 block: kron(block, I2) keeps the
    # (x, y, vx, vy, ax, ay) ordering
    return np.kron(block, np.eye(2))


def transition_matrix(dt: float) -> np.ndarray:
    """Constant-acceleration transition A for the 6-dim kinematic state."""
    return _per_axis(
        np.array(
            [
                [1.0, dt, 0.5 * dt**2],
                [0.0, 1.0, dt],
                [0.0, 0.0, 1.0],
            ]
        )
    )


def process_noise(dt: float, jerk_psd: float) -> np.ndarray:
    """Exact white-noise-jerk discretization, scaled by ``jerk_psd``."""
    block = np.array(
        [
            [dt**5 / 20.0, dt**4 / 8.0, dt**3 / 6.0],
            [dt**4 / 8.0, dt**3 / 3.0, dt**2 / 2.0],
            [dt**3 / 6.0, dt**2 / 2.0, dt],
        ]
    )
    return jerk_psd * _per_axis(block)


def predict(track: TrackState, cfg: MotionConfig) -> TrackState:
    """
    Propagate the track by ``cfg.dt``. The shape mean is kept as is; the
    shape covariance grows by the per-scan process noise. Callers apply the
    shape-covariance clamp afterwards.
    """
    A = transition_matrix(cfg.dt)
    kinematic = GaussianState(
        A @ track.kinematic.mean,
        symmetrize(
            A @ track.kinematic.cov @ A.T + process_noise(cfg.dt, cfg.jerk_psd)
        ),
    )
    shape = GaussianState(
        track.shape.mean.copy(),
        symmetrize(track.shape.cov + cfg.shape_process_noise),
    )
    return TrackState(kinematic, shape)
