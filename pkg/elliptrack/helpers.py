"""Shared numerical helpers for the Elliptrack filters."""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import ContractViolation, NumericalSingularityError

# Smallest admissible ratio between the smallest and largest Cholesky pivot
PIVOT_RATIO_FLOOR = 1e-12

# Relative tolerance for symmetry checks on input matrices
SYMMETRY_TOLERANCE = 1e-9


def as_vector(x, name: str, length: Optional[int] = None) -> np.ndarray:
    """
    Normalize any (n,), (n,1), (1,n) input into a flat float vector.

    Args:
        x: Array-like input
        name: Name used in error messages
        length: Expected length, if known

    Raises:
        ContractViolation: If the input is not vector-shaped or has the
            wrong length
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise ContractViolation(
            f"{name}: expected a vector, got shape {arr.shape}"
        )
    if length is not None and arr.shape[0] != length:
        raise ContractViolation(
            f"{name}: expected length {length}, got {arr.shape[0]}"
        )
    return arr


def as_matrix(
    x, name: str, shape: Optional[Tuple[int, int]] = None
) -> np.ndarray:
    """Coerce ``x`` to a 2-D float array, checking ``shape`` if given."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ContractViolation(
            f"{name}: expected a matrix, got shape {arr.shape}"
        )
    if shape is not None and arr.shape != tuple(shape):
        raise ContractViolation(
            f"{name}: expected shape {tuple(shape)}, got {arr.shape}"
        )
    return arr


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (C + C^T) / 2."""
    return 0.5 * (matrix + matrix.T)


def is_symmetric(matrix: np.ndarray, tol: float = SYMMETRY_TOLERANCE) -> bool:
    """Symmetry check relative to the largest absolute entry."""
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    if scale == 0.0:
        return True
    return bool(np.max(np.abs(matrix - matrix.T)) <= tol * scale)


def check_spd(matrix, name: str) -> np.ndarray:
    """
    Validate that ``matrix`` is square, symmetric and positive-definite.

    Raises:
        ContractViolation: If any of the checks fails
    """
    arr = as_matrix(matrix, name)
    if arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"{name}: expected square matrix, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name}: contains non-finite entries")
    if not is_symmetric(arr):
        raise ContractViolation(f"{name}: matrix is not symmetric")
    if np.min(np.linalg.eigvalsh(symmetrize(arr))) <= 0.0:
        raise ContractViolation(f"{name}: matrix is not positive-definite")
    return arr


def check_psd(matrix, name: str) -> np.ndarray:
    """Like :func:`check_spd` but admits zero eigenvalues."""
    arr = as_matrix(matrix, name)
    if arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"{name}: expected square matrix, got {arr.shape}")
    if not is_symmetric(arr):
        raise ContractViolation(f"{name}: matrix is not symmetric")
    eigvals = np.linalg.eigvalsh(symmetrize(arr))
    if eigvals.size and eigvals.min() < -SYMMETRY_TOLERANCE * max(
        1.0, float(np.abs(eigvals).max())
    ):
        raise ContractViolation(f"{name}: matrix is not positive semi-definite")
    return arr


def spd_factor(matrix: np.ndarray, name: str, guarded: bool = True):
    """
    Cholesky-factor an SPD matrix, using the factorization as the
    singularity detector. Unless ``guarded`` is False the pivot ratio is
    checked as well; prior covariances and information matrices are
    factored unguarded.

    Returns:
        The ``(factor, lower)`` pair accepted by ``scipy.linalg.cho_solve``

    Raises:
        NumericalSingularityError: If the factorization fails, or (guarded) the
            pivot ratio falls below PIVOT_RATIO_FLOOR
    """
    if not np.all(np.isfinite(matrix)):
        raise NumericalSingularityError(
            name, f"Matrix {name} contains non-finite entries"
        )
    try:
        factor, lower = scipy.linalg.cho_factor(
            matrix, lower=True, check_finite=False
        )
    except np.linalg.LinAlgError as e:
        raise NumericalSingularityError(
            name, f"Matrix {name} is not positive-definite: {str(e)}"
        )
    pivots = np.square(np.diag(factor))
    if guarded and pivots.min() < PIVOT_RATIO_FLOOR * pivots.max():
        raise NumericalSingularityError(
            name,
            f"Matrix {name} is ill-conditioned "
            f"(pivot ratio {pivots.min() / pivots.max():.3e})",
        )
    return factor, lower


def spd_solve(
    matrix: np.ndarray, rhs: np.ndarray, name: str, guarded: bool = True
) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for SPD ``matrix``."""
    return scipy.linalg.cho_solve(
        spd_factor(matrix, name, guarded), rhs, check_finite=False
    )


def spd_inverse(
    matrix: np.ndarray, name: str, guarded: bool = True
) -> np.ndarray:
    """Symmetrized inverse of an SPD matrix via its Cholesky factor."""
    inverse = spd_solve(matrix, np.eye(matrix.shape[0]), name, guarded)
    return symmetrize(inverse)


def pairwise_sum(values: np.ndarray) -> np.ndarray:
    """
    Tree-sum the rows of ``values`` (shape (L, d)) into a length-d vector.

    Every level adds neighbouring pairs, so rounding error grows with
    log2(L) and any reduction order on the same tree gives the same result.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ContractViolation(
            f"pairwise_sum: expected (L, d) array, got shape {values.shape}"
        )
    if values.shape[0] == 0:
        return np.zeros(values.shape[1])
    while values.shape[0] > 1:
        if values.shape[0] % 2:
            values = np.vstack([values, np.zeros((1, values.shape[1]))])
        values = values[0::2] + values[1::2]
    return values[0].copy()


def floor_eigenvalues(
    matrix: np.ndarray, floor: float
) -> Tuple[np.ndarray, int]:
    """
    Project a symmetric matrix onto {A : eigenvalues >= floor}.

    Returns:
        tuple: (projected matrix, number of eigenvalues that were raised)
    """
    eigvals, eigvecs = np.linalg.eigh(symmetrize(matrix))
    raised = int(np.count_nonzero(eigvals < floor))
    if raised == 0:
        return matrix, 0
    eigvals = np.maximum(eigvals, floor)
    return symmetrize((eigvecs * eigvals) @ eigvecs.T), raised
