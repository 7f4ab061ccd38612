"""
Batch information-filter updates for the multiplicative error model.

MEM-EIF[y_L] linearizes once at the prior and forms the pseudo-measurements
against the kinematic posterior; MEM-EIF[y_0] forms them against the prior
and can be split into U sequential chunks, reaching the MEM-EKF* at U = L.
Measurements only enter through (weighted) sums, so the batch updates do
not depend on the measurement order.
"""

import enum
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT_CLAMP_FACTOR
from .errors import (
    ContractViolation,
    DegenerateLinearizationError,
    ElliptrackError,
    with_context,
)
from .filters_core import (
    GaussianState,
    LinearMeasurementModel,
    information_sum_update,
)
from .helpers import floor_eigenvalues, pairwise_sum, symmetrize
from .mem_model import (
    MemNoiseConfig,
    ShapeLinearization,
    linearize,
    pseudo_covariance,
    pseudo_expectation,
    pseudo_outcomes,
)
from .memekf_star import H, MeasurementBatch, TrackState, floor_semi_axes
from .telemetry import degenerate_linearizations_total, shape_clamps_total

logger = logging.getLogger(__name__)

# Eigenvalue floor of C^t relative to tr(C^Y)
RESIDUAL_FLOOR_RATIO = 1e-9


class BatchVariant(str, enum.Enum):
    EIF_YL = "eif_yl"
    EIF_Y0 = "eif_y0"


@dataclass(frozen=True)
class BatchUpdateConfig:
    """
    Variant, number of sequential chunks (EIF_Y0 only) and the
    shape-covariance clamp factor.
    """

    variant: BatchVariant = BatchVariant.EIF_YL
    chunk_count: int = 1
    clamp_factor: float = DEFAULT_CLAMP_FACTOR

    def __post_init__(self):
        if self.chunk_count < 1:
            raise ContractViolation(
                f"chunk_count must be >= 1, got {self.chunk_count}"
            )
        if not 0.0 < self.clamp_factor <= 1.0:
            raise ContractViolation(
                f"clamp_factor must be in (0, 1], got {self.clamp_factor}"
            )
        if self.variant == BatchVariant.EIF_YL and self.chunk_count != 1:
            raise ContractViolation("EIF_YL always runs as a single batch")


def residual_covariance(
    C_Y: np.ndarray, lin: ShapeLinearization, C_p: np.ndarray
) -> np.ndarray:
    """
    C^t = C^Y - M C^p M^T, floored to stay SPD.

    Raises:
        DegenerateLinearizationError: If C^Y itself carries no information
    """
    scale = float(np.trace(C_Y))
    if not np.isfinite(scale) or scale <= 0.0:
        raise DegenerateLinearizationError(
            "Pseudo-measurement covariance has non-positive trace",
            {"matrix": "C^Y"},
        )
    C_t = symmetrize(C_Y - lin.M @ C_p @ lin.M.T)
    C_t, raised = floor_eigenvalues(C_t, RESIDUAL_FLOOR_RATIO * scale)
    if raised:
        degenerate_linearizations_total.labels(matrix="C^t").inc()
        logger.warning(
            f"Degenerate linearization: floored {raised} eigenvalue(s) of C^t"
        )
    return C_t


def _kinematic_batch(
    kinematic: GaussianState,
    lin: ShapeLinearization,
    noise: MemNoiseConfig,
    measurement_sum: np.ndarray,
    weight: float,
) -> GaussianState:
    C_s = symmetrize(lin.C_I + lin.C_II + noise.C_v)
    return information_sum_update(
        kinematic,
        LinearMeasurementModel(H, C_s),
        measurement_sum,
        weight,
        prior_name="kinematic prior covariance",
    )


def _shape_batch(
    shape: GaussianState,
    lin: ShapeLinearization,
    C_y: np.ndarray,
    pseudo_sum: np.ndarray,
    weight: float,
) -> GaussianState:
    Y_bar = pseudo_expectation(C_y)
    C_t = residual_covariance(pseudo_covariance(C_y), lin, shape.cov)
    # sum_i [Y_i - Y_bar + M p_0]
    shifted_sum = pseudo_sum - weight * (Y_bar - lin.M @ shape.mean)
    return information_sum_update(
        shape,
        LinearMeasurementModel(lin.M, C_t),
        shifted_sum,
        weight,
        prior_name="shape prior covariance",
    )


def _weighted_sums(
    measurements: np.ndarray, weights: Optional[np.ndarray]
) -> Tuple[np.ndarray, float]:
    if weights is None:
        return pairwise_sum(measurements), float(measurements.shape[0])
    return pairwise_sum(weights[:, None] * measurements), float(
        pairwise_sum(weights[:, None])[0]
    )


def _update_yl(
    track: TrackState,
    batch: MeasurementBatch,
    noise: MemNoiseConfig,
    cfg: BatchUpdateConfig,
    weights: Optional[np.ndarray],
) -> TrackState:
    measurements = batch.measurements
    y_sum, total_weight = _weighted_sums(measurements, weights)
    if total_weight == 0.0:
        return track

    lin = linearize(track.shape.mean, track.shape.cov, noise.C_h)
    kinematic = _kinematic_batch(
        track.kinematic, lin, noise, y_sum, total_weight
    )

    # pseudo-measurements against the kinematic posterior
    C_y = symmetrize(H @ kinematic.cov @ H.T + lin.spread + noise.C_v)
    Y = pseudo_outcomes(measurements, H @ kinematic.mean)
    Y_sum, _ = _weighted_sums(Y, weights)
    shape = _shape_batch(track.shape, lin, C_y, Y_sum, total_weight)

    updated = TrackState(kinematic, floor_semi_axes(shape))
    return clamp_shape_covariance(updated, cfg.clamp_factor)


def batch_update_yl(
    track: TrackState,
    batch: MeasurementBatch,
    noise: MemNoiseConfig,
    cfg: Optional[BatchUpdateConfig] = None,
) -> TrackState:
    """
    MEM-EIF[y_L]: one information update for the kinematics, then one for
    the shape with pseudo-measurements formed against the kinematic
    posterior, then the shape-covariance clamp. An empty batch returns the
    track unchanged.
    """
    cfg = cfg or BatchUpdateConfig()
    if len(batch) == 0:
        return track
    try:
        return _update_yl(track, batch, noise, cfg, None)
    except ElliptrackError as e:
        raise with_context(e, scan=batch.k)


def weighted_batch_update_yl(
    track: TrackState,
    batch: MeasurementBatch,
    weights: Sequence[float],
    noise: MemNoiseConfig,
    cfg: Optional[BatchUpdateConfig] = None,
) -> TrackState:
    """
    MEM-EIF[y_L] with per-measurement weights (e.g. association
    probabilities): sums become weighted sums and the measurement count
    becomes the total weight.

    Raises:
        ContractViolation: If weights do not match the batch or are negative
    """
    cfg = cfg or BatchUpdateConfig()
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if weights.shape[0] != len(batch):
        raise ContractViolation(
            f"Got {weights.shape[0]} weights for {len(batch)} measurements"
        )
    if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
        raise ContractViolation("Weights must be finite and non-negative")
    if len(batch) == 0:
        return track
    try:
        return _update_yl(track, batch, noise, cfg, weights)
    except ElliptrackError as e:
        raise with_context(e, scan=batch.k)


def chunk_bounds(length: int, chunk_count: int) -> List[Tuple[int, int]]:
    """
    Contiguous (start, stop) chunks of near-equal size, larger chunks first.
    More chunks than measurements is truncated to one chunk per measurement.
    """
    chunk_count = min(chunk_count, length)
    if chunk_count <= 0:
        return []
    base, extra = divmod(length, chunk_count)
    bounds = []
    start = 0
    for index in range(chunk_count):
        stop = start + base + (1 if index < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def _update_y0_chunk(
    track: TrackState, chunk: np.ndarray, noise: MemNoiseConfig
) -> TrackState:
    lin = linearize(track.shape.mean, track.shape.cov, noise.C_h)
    count = float(chunk.shape[0])
    kinematic = _kinematic_batch(
        track.kinematic, lin, noise, pairwise_sum(chunk), count
    )

    # pseudo-measurements against the chunk-start prediction
    prior = track.kinematic
    C_y = symmetrize(H @ prior.cov @ H.T + lin.spread + noise.C_v)
    Y = pseudo_outcomes(chunk, H @ prior.mean)
    shape = _shape_batch(track.shape, lin, C_y, pairwise_sum(Y), count)
    return TrackState(kinematic, floor_semi_axes(shape))


def batch_update_y0(
    track: TrackState,
    batch: MeasurementBatch,
    noise: MemNoiseConfig,
    cfg: Optional[BatchUpdateConfig] = None,
) -> TrackState:
    """
    MEM-EIF[y_0] over ``cfg.chunk_count`` contiguous chunks, relinearizing
    at the current estimate before each chunk. With one chunk per
    measurement this is the MEM-EKF*; with a single chunk it is the pure
    y_0 batch. No clamp is applied here.
    """
    cfg = cfg or BatchUpdateConfig(variant=BatchVariant.EIF_Y0)
    for index, (start, stop) in enumerate(
        chunk_bounds(len(batch), cfg.chunk_count)
    ):
        try:
            track = _update_y0_chunk(
                track, batch.measurements[start:stop], noise
            )
        except ElliptrackError as e:
            raise with_context(e, chunk=index, scan=batch.k)
    return track


def clamp_shape_covariance(
    track: TrackState, clamp_factor: float = DEFAULT_CLAMP_FACTOR
) -> TrackState:
    """
    Keep the semi-axis variances at or below (clamp_factor * l)^2 by
    rescaling the matching row and column of C^p, which preserves every
    correlation coefficient.
    """
    cov = track.shape.cov
    mean = track.shape.mean
    scales = np.ones(3)
    for index, axis in ((1, "l1"), (2, "l2")):
        bound = (clamp_factor * mean[index]) ** 2
        if cov[index, index] > bound:
            scales[index] = np.sqrt(bound / cov[index, index])
            shape_clamps_total.labels(axis=axis).inc()
            logger.debug(
                f"Clamped {axis} variance {cov[index, index]:.3f} to {bound:.3f}"
            )
    if np.all(scales == 1.0):
        return track
    clamped = cov * np.outer(scales, scales)
    for index in (1, 2):
        if scales[index] != 1.0:
            clamped[index, index] = (clamp_factor * mean[index]) ** 2
    return TrackState(track.kinematic, GaussianState(mean, clamped))
