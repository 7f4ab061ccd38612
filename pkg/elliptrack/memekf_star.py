"""
Sequential MEM-EKF* measurement update.

Each measurement is processed in turn: a kinematic Kalman step with the
extent folded into the measurement noise, then a shape Kalman step on the
second-order pseudo-measurement formed against the pre-update position.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import MIN_SEMI_AXIS
from .errors import ContractViolation, ElliptrackError, with_context
from .filters_core import GaussianState, kalman_correct
from .helpers import as_matrix, symmetrize
from .mem_model import (
    MemNoiseConfig,
    ShapeParams,
    linearize,
    pseudo_covariance,
    pseudo_expectation,
    pseudo_outcome,
)
from .metrics import Ellipse, extent_matrix, gw_distance

# Projects the kinematic state (x, y, vx, vy, ax, ay) onto the position
H = np.hstack([np.eye(2), np.zeros((2, 4))])

KINEMATIC_DIM = 6
SHAPE_DIM = 3


@dataclass(frozen=True, eq=False)
class TrackState:
    """Kinematic estimate (6-dim) paired with a shape estimate (alpha, l1, l2)."""

    kinematic: GaussianState
    shape: GaussianState

    def __post_init__(self):
        if self.kinematic.dim != KINEMATIC_DIM:
            raise ContractViolation(
                f"Kinematic state must have {KINEMATIC_DIM} entries, "
                f"got {self.kinematic.dim}"
            )
        if self.shape.dim != SHAPE_DIM:
            raise ContractViolation(
                f"Shape state must have {SHAPE_DIM} entries, got {self.shape.dim}"
            )

    @property
    def center(self) -> np.ndarray:
        return H @ self.kinematic.mean

    @property
    def shape_params(self) -> ShapeParams:
        return ShapeParams.from_vector(self.shape.mean)

    def ellipse(self) -> Ellipse:
        return Ellipse(self.center, extent_matrix(self.shape.mean))

    def validate(self) -> "TrackState":
        self.kinematic.validate()
        self.shape.validate()
        ShapeParams.from_vector(self.shape.mean)
        return self


@dataclass(frozen=True, eq=False)
class MeasurementBatch:
    """Position measurements (meters) received in one scan."""

    measurements: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    k: int = 0

    def __post_init__(self):
        arr = np.asarray(self.measurements, dtype=float)
        if arr.size == 0:
            arr = np.zeros((0, 2))
        object.__setattr__(
            self, "measurements", as_matrix(arr, "measurements")
        )
        if self.measurements.shape[1] != 2:
            raise ContractViolation(
                "Measurements must be 2-D positions, got shape "
                f"{self.measurements.shape}"
            )

    def __len__(self) -> int:
        return self.measurements.shape[0]

    def reversed(self) -> "MeasurementBatch":
        return MeasurementBatch(self.measurements[::-1], self.k)

    def permuted(self, order) -> "MeasurementBatch":
        return MeasurementBatch(self.measurements[np.asarray(order)], self.k)

    def subset(self, start: int, stop: int) -> "MeasurementBatch":
        return MeasurementBatch(self.measurements[start:stop], self.k)


def floor_semi_axes(shape: GaussianState) -> GaussianState:
    """Keep l1, l2 at or above MIN_SEMI_AXIS."""
    if shape.mean[1] >= MIN_SEMI_AXIS and shape.mean[2] >= MIN_SEMI_AXIS:
        return shape
    mean = shape.mean.copy()
    mean[1:] = np.maximum(mean[1:], MIN_SEMI_AXIS)
    return GaussianState(mean, shape.cov)


def _measurement_step(
    track: TrackState, y: np.ndarray, noise: MemNoiseConfig
) -> TrackState:
    kinematic, shape = track.kinematic, track.shape
    lin = linearize(shape.mean, shape.cov, noise.C_h)

    # kinematics: extent and sensor noise act as one effective noise term
    y_hat = H @ kinematic.mean
    cross_ry = kinematic.cov @ H.T
    C_y = symmetrize(H @ cross_ry + lin.C_I + lin.C_II + noise.C_v)
    new_kinematic = kalman_correct(
        kinematic, cross_ry, C_y, y - y_hat, "kinematic innovation covariance"
    )

    # shape: pseudo-measurement against the pre-update prediction
    Y = pseudo_outcome(y, y_hat)
    Y_bar = pseudo_expectation(C_y)
    C_Y = pseudo_covariance(C_y)
    cross_pY = shape.cov @ lin.M.T
    new_shape = kalman_correct(
        shape, cross_pY, C_Y, Y - Y_bar, "pseudo-measurement covariance"
    )
    return TrackState(new_kinematic, floor_semi_axes(new_shape))


def sequential_update(
    track: TrackState, batch: MeasurementBatch, noise: MemNoiseConfig
) -> TrackState:
    """
    MEM-EKF* update: one kinematic and one shape Kalman step per
    measurement, in batch order.

    Raises:
        NumericalSingularityError: With the offending measurement index in
            its context
    """
    for index, y in enumerate(batch.measurements):
        try:
            track = _measurement_step(track, y, noise)
        except ElliptrackError as e:
            raise with_context(e, measurement=index, scan=batch.k)
    return track


def order_sensitivity_probe(
    track: TrackState,
    batch: MeasurementBatch,
    noise: MemNoiseConfig,
) -> float:
    """
    Gaussian Wasserstein distance between the sequential update on the
    batch and on the reversed batch. A diagnostic, not an estimator.
    """
    if len(batch) < 2:
        return 0.0
    forward = sequential_update(track, batch, noise)
    backward = sequential_update(track, batch.reversed(), noise)
    return gw_distance(forward.ellipse(), backward.ellipse())
