"""Dense linear-algebra kernel shared by every other module.

Thin, contract-enforcing wrappers around LAPACK (via numpy/scipy): symmetric
positive-definite solves, minimum-norm least squares, symmetric eigenvalues.
All routines operate on float64 arrays and refuse non-finite input.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

SYMMETRY_TOL = 1e-10


class NotPositiveDefinite(ValueError):
    """Cholesky pivot <= 0; the matrix is not (numerically) positive definite."""


class NoConvergence(RuntimeError):
    """Eigenvalue iteration exceeded its budget."""


def _as_matrix(a, name: str) -> NDArray[np.float64]:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _check_symmetric(a: NDArray[np.float64], name: str) -> None:
    dev = np.max(np.abs(a - a.T)) if a.size else 0.0
    scale = 1.0 + (np.max(np.abs(a)) if a.size else 0.0)
    if dev > SYMMETRY_TOL * scale:
        raise ValueError(f"{name} is not symmetric (max deviation {dev:.3e})")


def cholesky_solve(a, b) -> NDArray[np.float64]:
    """Solve A Z = B for symmetric positive-definite A.

    Raises NotPositiveDefinite when factorization hits a non-positive pivot
    (typically a degenerate Gram matrix or a ridge factor chosen too small).
    """
    A = _as_matrix(a, "A")
    B = _as_matrix(b, "B")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    _check_symmetric(A, "A")
    A = 0.5 * (A + A.T)
    try:
        factor = cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return cho_solve(factor, B, check_finite=False)


def least_squares(a, b) -> NDArray[np.float64]:
    """Minimum-norm least-squares solution of A Z ~ B (SVD-backed).

    Rank deficiency is handled by the minimum-norm convention rather than an
    error.
    """
    A = _as_matrix(a, "A")
    B = _as_matrix(b, "B")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"row mismatch: A is {A.shape}, B is {B.shape}")
    z, *_ = np.linalg.lstsq(A, B, rcond=None)
    return z


def sym_eigvals(a) -> NDArray[np.float64]:
    """Eigenvalues of a symmetric matrix, sorted descending."""
    A = _as_matrix(a, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    _check_symmetric(A, "A")
    try:
        vals = np.linalg.eigvalsh(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NoConvergence(str(exc)) from exc
    return vals[::-1].copy()
