#!/usr/bin/env python3
"""
Dense and sparse matrix primitives

DenseMatrix is a 2-D float64 numpy array, SparseMatrix a canonical CSR matrix
(float64, sorted column indices, no duplicates, no stored zeros).
"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg
from scipy.special import softmax

from shoestring_errors import DimensionMismatchError, SolverError

logger = logging.getLogger(__name__)

DenseMatrix = np.ndarray
SparseMatrix = sp.csr_matrix

SYMMETRY_TOLERANCE = 1e-10
DEFAULT_CG_TOL = 1e-8


def as_dense(values) -> DenseMatrix:
    """Coerce to a 2-D float64 array (1-D input becomes a column)"""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D matrix, got {m.ndim} dimensions")
    return m


def as_sparse(matrix) -> SparseMatrix:
    """Canonical CSR copy of any scipy sparse matrix or dense array"""
    a = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    return a


def identity(n: int) -> SparseMatrix:
    return as_sparse(sp.identity(n, dtype=np.float64, format='csr'))


def densify(a: SparseMatrix) -> DenseMatrix:
    return np.asarray(a.toarray(), dtype=np.float64)


def spmm(a: SparseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Sparse times dense product"""
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"spmm: sparse operand is {a.shape[0]}x{a.shape[1]}, dense operand is {b.shape[0]}x{b.shape[1]}"
        )
    return np.asarray(a @ b, dtype=np.float64)


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"matmul: {a.shape[0]}x{a.shape[1]} times {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def row_softmax(m: DenseMatrix) -> DenseMatrix:
    """Row-wise softmax; scipy subtracts the row max before exponentiating"""
    return softmax(m, axis=1)


def relu(m: DenseMatrix) -> DenseMatrix:
    return np.maximum(m, 0.0)


def is_symmetric(a: SparseMatrix, tol: float = SYMMETRY_TOLERANCE) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    diff = (a - a.T).tocsr()
    return diff.nnz == 0 or float(np.abs(diff.data).max()) <= tol


def conjugate_gradient_solve(a: SparseMatrix, b: DenseMatrix, tol: float = DEFAULT_CG_TOL,
                             max_iter: Optional[int] = None) -> DenseMatrix:
    """
    Solve a X = B column by column for symmetric positive-definite a

    Args:
        a: square symmetric positive-definite sparse matrix
        b: right-hand sides, one per column
        tol: bound on ||a x - b|| / max(||b||, 1) for every column
        max_iter: iteration cap per column (default 10 * n)

    Returns:
        Dense solution with the shape of b
    """
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"CG needs a square matrix, got {a.shape[0]}x{a.shape[1]}")
    if b.shape[0] != n:
        raise DimensionMismatchError(f"CG: matrix has {n} rows, right-hand side has {b.shape[0]}")
    if not is_symmetric(a):
        raise DimensionMismatchError("CG needs a symmetric matrix")

    max_iter = max_iter if max_iter is not None else 10 * max(n, 1)
    # scipy tests its recursive residual; the true residual is re-checked after each solve
    inner_tol = tol / 10.0

    x = np.zeros(b.shape, dtype=np.float64)
    for j in range(b.shape[1]):
        rhs = b[:, j]
        scale = max(float(np.linalg.norm(rhs)), 1.0)
        if not rhs.any():
            continue
        iterations = 0

        def _count(_xk):
            nonlocal iterations
            iterations += 1

        sol, _info = cg(a, rhs, rtol=inner_tol, atol=inner_tol, maxiter=max_iter, callback=_count)
        residual = float(np.linalg.norm(a @ sol - rhs)) / scale
        if residual > tol:
            logger.error(f"CG failed on column {j}: residual {residual:.3e} after {iterations} iterations")
            raise SolverError(
                f"Conjugate gradient did not converge on column {j} (residual {residual:.3e})",
                residual=residual,
                iterations=iterations,
            )
        x[:, j] = sol
    return x
