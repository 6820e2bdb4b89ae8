"""Dense least squares and matrix-vector products for the partition fits."""

import numpy as np
from scipy import linalg as sla

from maxlin.core.model import DimensionError

RANK_RTOL = 1e-12


def as_matrix(A) -> np.ndarray:
    """Validate a dense, finite, non-empty 2-D float matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def matvec(A, v) -> np.ndarray:
    A = as_matrix(A)
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != A.shape[1]:
        raise DimensionError(f"matrix has {A.shape[1]} columns, vector has {v.size} entries")
    return A @ v


def least_squares(A, b, rtol: float = RANK_RTOL) -> np.ndarray:
    """Minimum-norm minimizer of ||A x - b||_2.

    Column-pivoted Householder QR fixes the numerical rank r (diagonal
    entries above rtol·|r11|); a second QR of the leading r rows of R
    gives the complete orthogonal decomposition used for the
    minimum-norm solution.

    Args:
        A: (m, q) matrix.
        b: length-m right-hand side.
        rtol: Relative rank threshold.

    Returns:
        Length-q solution.
    """
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64).ravel()
    m, q = A.shape
    if b.size != m:
        raise DimensionError(f"matrix has {m} rows, right-hand side has {b.size} entries")

    Q, R, perm = sla.qr(A, mode='economic', pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(q)
    rank = int(np.count_nonzero(diag > rtol * diag[0]))

    qtb = Q[:, :rank].T @ b
    R1 = R[:rank, :]
    if rank == q:
        y = sla.solve_triangular(R1, qtb, lower=False)
    else:
        # R1 = T^T Z^T with Z orthonormal (q×r); minimum-norm y = Z u, T^T u = Q1^T b
        Z, T = sla.qr(R1.T, mode='economic')
        u = sla.solve_triangular(T, qtb, trans='T', lower=False)
        y = Z @ u

    x = np.empty(q)
    x[perm] = y
    return x
