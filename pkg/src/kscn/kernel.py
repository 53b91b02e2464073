"""Gaussian Gram construction over [hidden outputs, inputs] and kernel ridge.

K_ij = exp(-||f_i - f_j||^2 / c) with feature rows f_i = [H(i, :), x_i]. The
squared-distance matrix is cached alongside K so appending one node column is
an O(n^2) update: the new column h adds (h_i - h_j)^2 to every pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linalg import cholesky_solve


class WidthMismatch(ValueError):
    """Train/test feature widths differ."""


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian width c (divides the squared distance) and ridge factor tau."""

    c: float
    tau: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("kernel width c must be positive")
        if not self.tau > 0:
            raise ValueError("ridge factor tau must be positive")


@dataclass(frozen=True)
class GramState:
    """Symmetric kernel matrix, its squared distances, and the feature width."""

    K: NDArray[np.float64]
    sqdist: NDArray[np.float64]
    feature_width: int


@dataclass(frozen=True)
class KernelSolution:
    """Dual coefficients alpha = (K + tau I)^-1 Y and the fitted values K alpha."""

    alpha: NDArray[np.float64]
    fitted: NDArray[np.float64]


def _stack_features(H: NDArray[np.float64] | None, X: NDArray[np.float64]) -> NDArray[np.float64]:
    if H is None or H.size == 0:
        return np.asarray(X, dtype=np.float64)
    return np.column_stack([H, X])


def _pairwise_sqdist(F: NDArray[np.float64]) -> NDArray[np.float64]:
    s = np.sum(F * F, axis=1)
    D = s[:, None] + s[None, :] - 2.0 * (F @ F.T)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def _cross_sqdist(Ft: NDArray[np.float64], F: NDArray[np.float64]) -> NDArray[np.float64]:
    a = np.sum(Ft * Ft, axis=1)
    b = np.sum(F * F, axis=1)
    D = a[:, None] + b[None, :] - 2.0 * (Ft @ F.T)
    np.maximum(D, 0.0, out=D)
    return D


def gram_build(H: NDArray[np.float64] | None, X: NDArray[np.float64], c: float) -> GramState:
    """Gram over the concatenated feature rows; H may be empty (inputs only)."""
    if c <= 0:
        raise ValueError("kernel width c must be positive")
    F = _stack_features(H, X)
    D = _pairwise_sqdist(F)
    return GramState(K=np.exp(-D / c), sqdist=D, feature_width=F.shape[1])


def gram_extend(g: GramState, h_new: NDArray[np.float64], c: float) -> GramState:
    """Append one node column: distances grow by (h_i - h_j)^2 pairwise."""
    h = np.asarray(h_new, dtype=np.float64).reshape(-1)
    if h.shape[0] != g.K.shape[0]:
        raise ValueError(f"column length {h.shape[0]} != gram size {g.K.shape[0]}")
    diff = h[:, None] - h[None, :]
    D = g.sqdist + diff * diff
    return GramState(K=np.exp(-D / c), sqdist=D, feature_width=g.feature_width + 1)


def cross_sqdist_extend(Dt: NDArray[np.float64], h_test: NDArray[np.float64],
                        h_train: NDArray[np.float64]) -> NDArray[np.float64]:
    """Same additive update for a rectangular test-by-train distance block."""
    ht = np.asarray(h_test, dtype=np.float64).reshape(-1, 1)
    hr = np.asarray(h_train, dtype=np.float64).reshape(1, -1)
    diff = ht - hr
    return Dt + diff * diff


def kernel_ridge_fit(K: NDArray[np.float64], Y: NDArray[np.float64], tau: float) -> KernelSolution:
    """Solve (K + tau I) alpha = Y via Cholesky; fitted values are K alpha."""
    if tau <= 0:
        raise ValueError("ridge factor tau must be positive")
    A = K + tau * np.eye(K.shape[0])
    alpha = cholesky_solve(A, Y)
    return KernelSolution(alpha=alpha, fitted=K @ alpha)


def cross_gram(train_features: tuple[NDArray[np.float64] | None, NDArray[np.float64]],
               test_features: tuple[NDArray[np.float64] | None, NDArray[np.float64]],
               c: float) -> NDArray[np.float64]:
    """Rectangular kernel block between test rows and training rows."""
    F = _stack_features(*train_features)
    Ft = _stack_features(*test_features)
    if F.shape[1] != Ft.shape[1]:
        raise WidthMismatch(f"train width {F.shape[1]} != test width {Ft.shape[1]}")
    return np.exp(-_cross_sqdist(Ft, F) / c)


def kernel_predict(K_t: NDArray[np.float64], alpha: NDArray[np.float64]) -> NDArray[np.float64]:
    if K_t.shape[1] != alpha.shape[0]:
        raise ValueError(f"K_t columns {K_t.shape[1]} != alpha rows {alpha.shape[0]}")
    return K_t @ alpha
