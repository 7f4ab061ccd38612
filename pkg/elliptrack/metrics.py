"""Gaussian Wasserstein distance between elliptical estimates."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .helpers import as_matrix, as_vector
from .mem_model import shape_matrix


@dataclass(frozen=True, eq=False)
class Ellipse:
    """Ellipse as a Gaussian: centre (m) and SPD extent matrix Sigma (m^2)."""

    center: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, "center", 2))
        object.__setattr__(
            self, "Sigma", as_matrix(self.Sigma, "Sigma", (2, 2))
        )


def extent_matrix(p) -> np.ndarray:
    """Sigma = S(p) S(p)^T, eigenvalues l1^2 and l2^2."""
    S = shape_matrix(p)
    sigma = S @ S.T
    return 0.5 * (sigma + sigma.T)


def _check_spd_2x2(sigma: np.ndarray, name: str) -> None:
    a, b, c, d = sigma[0, 0], sigma[0, 1], sigma[1, 0], sigma[1, 1]
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if not np.all(np.isfinite(sigma)) or abs(b - c) > 1e-9 * scale:
        raise ContractViolation(f"{name} is not symmetric")
    if a <= 0 or a * d - b * c <= 0:
        raise ContractViolation(f"{name} is not positive-definite")


def sqrtm_spd_2x2(A: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 SPD matrix (trace/determinant form)."""
    root_det = math.sqrt(max(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0], 0.0))
    scale = math.sqrt(A[0, 0] + A[1, 1] + 2.0 * root_det)
    return (A + root_det * np.eye(2)) / scale


def gw_distance(a: Ellipse, b: Ellipse) -> float:
    """
    d^2 = |c1 - c2|^2 + tr(S1 + S2 - 2 (sqrt(S1) S2 sqrt(S1))^(1/2))

    Raises:
        ContractViolation: If either extent matrix is not SPD
    """
    _check_spd_2x2(a.Sigma, "first Sigma")
    _check_spd_2x2(b.Sigma, "second Sigma")
    offset = a.center - b.center
    center_term = float(offset @ offset)
    if np.array_equal(a.Sigma, b.Sigma):
        return math.sqrt(center_term)

    root_a = sqrtm_spd_2x2(a.Sigma)
    cross = sqrtm_spd_2x2(root_a @ b.Sigma @ root_a)
    shape_term = float(np.trace(a.Sigma) + np.trace(b.Sigma) - 2.0 * np.trace(cross))
    # rounding can push the trace term slightly below zero
    return math.sqrt(center_term + max(shape_term, 0.0))
