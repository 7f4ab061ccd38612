"""
Linear-Gaussian estimation primitives.

Moment form (mean, covariance) and information form (xi, Lambda) of a
Gaussian, the sequential Kalman update and the batch information update.
Nothing in here knows about extended objects; the MEM trackers build on
these functions.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ContractViolation
from .helpers import (
    as_matrix,
    as_vector,
    check_spd,
    is_symmetric,
    pairwise_sum,
    spd_factor,
    spd_inverse,
    spd_solve,
    symmetrize,
)


def _check_symmetric(matrix: np.ndarray, name: str) -> None:
    # definiteness is left to the SPD factorization at update time
    if np.all(np.isfinite(matrix)) and not is_symmetric(matrix):
        raise ContractViolation(f"{name}: matrix is not symmetric")


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean vector and SPD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        cov = as_matrix(self.cov, "cov", (mean.shape[0], mean.shape[0]))
        _check_symmetric(cov, "cov")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def validate(self) -> "GaussianState":
        """Check the SPD invariant; returns self for chaining."""
        check_spd(self.cov, "cov")
        return self


@dataclass(frozen=True, eq=False)
class LinearMeasurementModel:
    """y = H x + v with v ~ N(0, R)."""

    H: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        H = as_matrix(self.H, "H")
        R = as_matrix(self.R, "R", (H.shape[0], H.shape[0]))
        _check_symmetric(R, "R")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "R", R)

    @property
    def measurement_dim(self) -> int:
        return self.H.shape[0]

    @property
    def state_dim(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True, eq=False)
class InformationState:
    """Information vector xi = Lambda @ mean and information matrix Lambda."""

    info_vector: np.ndarray
    info_matrix: np.ndarray

    def __post_init__(self):
        xi = as_vector(self.info_vector, "info_vector")
        lam = as_matrix(
            self.info_matrix, "info_matrix", (xi.shape[0], xi.shape[0])
        )
        _check_symmetric(lam, "info_matrix")
        object.__setattr__(self, "info_vector", xi)
        object.__setattr__(self, "info_matrix", lam)


def _check_model(state: GaussianState, model: LinearMeasurementModel) -> None:
    if model.state_dim != state.dim:
        raise ContractViolation(
            f"Model expects state dimension {model.state_dim}, "
            f"state has dimension {state.dim}"
        )


def kalman_correct(
    state: GaussianState,
    cross_cov: np.ndarray,
    innovation_cov: np.ndarray,
    residual: np.ndarray,
    name: str = "innovation covariance",
) -> GaussianState:
    """
    One Kalman correction in cross-covariance form:

        mean <- mean + C_xy C_y^-1 residual
        cov  <- cov  - C_xy C_y^-1 C_xy^T

    ``name`` is reported if ``innovation_cov`` turns out to be singular.
    """
    factor = spd_factor(innovation_cov, name)
    # (C_y^-1 C_xy^T)^T == C_xy C_y^-1 because C_y is symmetric
    gain_t = scipy.linalg.cho_solve(factor, cross_cov.T, check_finite=False)
    mean = state.mean + gain_t.T @ residual
    cov = symmetrize(state.cov - cross_cov @ gain_t)
    return GaussianState(mean, cov)


def kalman_update(
    state: GaussianState, model: LinearMeasurementModel, y
) -> GaussianState:
    """
    Sequential Kalman update with a single measurement ``y``.

    Raises:
        ContractViolation: On dimension mismatch
        NumericalSingularityError: If R + H C H^T is singular
    """
    _check_model(state, model)
    y = as_vector(y, "y", model.measurement_dim)
    H = model.H
    cross_cov = state.cov @ H.T
    innovation_cov = symmetrize(model.R + H @ cross_cov)
    return kalman_correct(
        state, cross_cov, innovation_cov, y - H @ state.mean
    )


def to_information(state: GaussianState) -> InformationState:
    """Lambda = cov^-1, xi = Lambda mean."""
    info_matrix = spd_inverse(state.cov, "cov", guarded=False)
    return InformationState(info_matrix @ state.mean, info_matrix)


def from_information(info: InformationState) -> GaussianState:
    """cov = Lambda^-1, mean = cov xi."""
    cov = spd_inverse(info.info_matrix, "info_matrix", guarded=False)
    return GaussianState(cov @ info.info_vector, cov)


def information_sum_update(
    state: GaussianState,
    model: LinearMeasurementModel,
    measurement_sum: np.ndarray,
    count: float,
    prior_name: str = "prior covariance",
) -> GaussianState:
    """
    Batch information update from the sufficient statistics of a batch:
    the (possibly weighted) measurement sum and the (possibly fractional)
    measurement count.

        Lambda_L = Lambda_0 + count H^T R^-1 H
        mean_L   = mean_0 + Lambda_L^-1 H^T R^-1 (sum_i y_i - count H mean_0)

    which is xi_L = xi_0 + H^T R^-1 sum_i y_i written relative to the prior
    mean. Only R carries the pivot-ratio guard.
    """
    _check_model(state, model)
    prior_info = spd_inverse(state.cov, prior_name, guarded=False)
    # R^-1 H, solved rather than inverted
    r_inv_h = spd_solve(model.R, model.H, "R")
    info_matrix = symmetrize(prior_info + count * (model.H.T @ r_inv_h))
    cov = spd_inverse(info_matrix, "info_matrix", guarded=False)
    innovation_sum = measurement_sum - count * (model.H @ state.mean)
    mean = state.mean + cov @ (r_inv_h.T @ innovation_sum)
    return GaussianState(mean, cov)


def information_batch_update(
    state: GaussianState,
    model: LinearMeasurementModel,
    batch: Sequence,
) -> GaussianState:
    """
    Update ``state`` with every measurement in ``batch`` in one step.

    Equivalent to folding :func:`kalman_update` over the batch; an empty
    batch returns the prior unchanged.
    """
    _check_model(state, model)
    measurements = np.asarray(batch, dtype=float)
    if measurements.size == 0:
        return state
    measurements = measurements.reshape(len(batch), -1)
    if measurements.shape[1] != model.measurement_dim:
        raise ContractViolation(
            f"Measurements have length {measurements.shape[1]}, model "
            f"expects {model.measurement_dim}"
        )
    return information_sum_update(
        state, model, pairwise_sum(measurements), measurements.shape[0]
    )
