"""
Multiplicative error model (MEM) quantities for elliptical targets.

Measurements are y = H r + S(p) h + v with shape parameters
p = (alpha, l1, l2). All pseudo-measurement 3-vectors use the component
order (xx, yy, xy).
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .config import DEFAULT_MEASUREMENT_NOISE, DEFAULT_MULTIPLICATIVE_NOISE
from .errors import ContractViolation
from .helpers import as_matrix, as_vector, check_spd, symmetrize

# Drops the duplicated off-diagonal of a Kronecker square (xx, yy, xy)
F = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)

# Same as F but keeps the (yx) entry of the third component
F_TILDE = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)

_F_PAIR_T = (F + F_TILDE).T

# Pseudo-measurement type: a 3-vector (xx, yy, xy) in m^2
PseudoMeasurement = np.ndarray


@dataclass(frozen=True)
class ShapeParams:
    """Ellipse orientation (rad) and semi-axis lengths (m)."""

    alpha: float
    l1: float
    l2: float

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise ContractViolation(
                f"Semi-axes must be positive, got l1={self.l1}, l2={self.l2}"
            )

    @classmethod
    def from_vector(cls, p) -> "ShapeParams":
        p = as_vector(p, "shape parameters", 3)
        return cls(float(p[0]), float(p[1]), float(p[2]))

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.l1, self.l2])


@dataclass(frozen=True, eq=False)
class MemNoiseConfig:
    """Multiplicative-noise covariance C_h and sensor-noise covariance C_v."""

    C_v: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_MEASUREMENT_NOISE)
    )
    C_h: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_MULTIPLICATIVE_NOISE)
    )

    def __post_init__(self):
        object.__setattr__(
            self, "C_v", as_matrix(self.C_v, "C_v", (2, 2))
        )
        object.__setattr__(
            self, "C_h", as_matrix(self.C_h, "C_h", (2, 2))
        )

    def validate(self) -> "MemNoiseConfig":
        check_spd(self.C_v, "C_v")
        check_spd(self.C_h, "C_h")
        return self


@dataclass(frozen=True, eq=False)
class ShapeLinearization:
    """Everything the MEM updates need, evaluated at one shape estimate."""

    S: np.ndarray
    J1: np.ndarray
    J2: np.ndarray
    M: np.ndarray
    C_I: np.ndarray
    C_II: np.ndarray

    @property
    def S1(self) -> np.ndarray:
        return self.S[0]

    @property
    def S2(self) -> np.ndarray:
        return self.S[1]

    @property
    def spread(self) -> np.ndarray:
        """C_I + C_II, the extent contribution to the innovation covariance."""
        return self.C_I + self.C_II


def _params(p) -> Tuple[float, float, float]:
    if isinstance(p, ShapeParams):
        return p.alpha, p.l1, p.l2
    alpha, l1, l2 = as_vector(p, "shape parameters", 3)
    return float(alpha), float(l1), float(l2)


def shape_matrix(p) -> np.ndarray:
    """S(p) = R(alpha) diag(l1, l2)."""
    alpha, l1, l2 = _params(p)
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[l1 * c, -l2 * s], [l1 * s, l2 * c]])


def shape_jacobians(p) -> Tuple[np.ndarray, np.ndarray]:
    """
    Jacobians of the rows S1, S2 of S(p) with respect to (alpha, l1, l2).
    Row k of Jn is the gradient of the k-th entry of Sn.
    """
    alpha, l1, l2 = _params(p)
    c, s = np.cos(alpha), np.sin(alpha)
    J1 = np.array([[-l1 * s, c, 0.0], [-l2 * c, 0.0, -s]])
    J2 = np.array([[l1 * c, s, 0.0], [-l2 * s, 0.0, c]])
    return J1, J2


def _moment_rows(S, J1, J2, C_h) -> np.ndarray:
    S1_Ch = S[0] @ C_h
    S2_Ch = S[1] @ C_h
    return np.vstack(
        [
            2.0 * S1_Ch @ J1,
            2.0 * S2_Ch @ J2,
            S1_Ch @ J2 + S2_Ch @ J1,
        ]
    )


def moment_matrix(p, C_h) -> np.ndarray:
    """
    Linearization M of the pseudo-measurement mean with respect to the shape
    parameters; row k is the gradient of the k-th (xx, yy, xy) component.
    """
    S = shape_matrix(p)
    J1, J2 = shape_jacobians(p)
    return _moment_rows(S, J1, J2, np.asarray(C_h, dtype=float))


def _spread_from(S, J1, J2, C_p, C_h) -> Tuple[np.ndarray, np.ndarray]:
    C_I = symmetrize(S @ C_h @ S.T)
    jacobians = (J1, J2)
    C_II = np.empty((2, 2))
    for m in range(2):
        for n in range(m, 2):
            value = np.trace(C_p @ jacobians[n].T @ C_h @ jacobians[m])
            C_II[m, n] = value
            C_II[n, m] = value
    return C_I, C_II


def spread_covariances(p, C_p, C_h) -> Tuple[np.ndarray, np.ndarray]:
    """
    Extent-induced covariance C_I = S C_h S^T and shape-uncertainty-induced
    covariance C_II[m, n] = tr(C_p Jn^T C_h Jm).
    """
    S = shape_matrix(p)
    J1, J2 = shape_jacobians(p)
    return _spread_from(
        S,
        J1,
        J2,
        np.asarray(C_p, dtype=float),
        np.asarray(C_h, dtype=float),
    )


def linearize(p, C_p, C_h) -> ShapeLinearization:
    """Evaluate S, J1, J2, M, C_I, C_II at shape mean ``p``."""
    C_p = np.asarray(C_p, dtype=float)
    C_h = np.asarray(C_h, dtype=float)
    S = shape_matrix(p)
    J1, J2 = shape_jacobians(p)
    C_I, C_II = _spread_from(S, J1, J2, C_p, C_h)
    return ShapeLinearization(
        S=S,
        J1=J1,
        J2=J2,
        M=_moment_rows(S, J1, J2, C_h),
        C_I=C_I,
        C_II=C_II,
    )


def pseudo_outcome(y, y_hat) -> PseudoMeasurement:
    """F ((y - y_hat) kron (y - y_hat)) = (dx^2, dy^2, dx dy)."""
    d = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    return np.array([d[0] * d[0], d[1] * d[1], d[0] * d[1]])


def pseudo_outcomes(measurements: np.ndarray, y_hat) -> np.ndarray:
    """Row-wise :func:`pseudo_outcome` for an (L, 2) array of measurements."""
    d = np.asarray(measurements, dtype=float) - np.asarray(y_hat, dtype=float)
    return np.column_stack([d[:, 0] ** 2, d[:, 1] ** 2, d[:, 0] * d[:, 1]])


def pseudo_expectation(C_y) -> np.ndarray:
    """F vect(C_y) = (C_y[0,0], C_y[1,1], C_y[0,1])."""
    C_y = np.asarray(C_y, dtype=float)
    return np.array([C_y[0, 0], C_y[1, 1], C_y[0, 1]])


def pseudo_covariance(C_y) -> np.ndarray:
    """Covariance of the pseudo-measurement: F (C_y kron C_y) (F + F~)^T."""
    C_y = np.asarray(C_y, dtype=float)
    return symmetrize(F @ np.kron(C_y, C_y) @ _F_PAIR_T)
