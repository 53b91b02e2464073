"""Comparison learners sharing the same plumbing: RVFL, KRVFL, RBFN.

RVFL draws its basis without any admissibility test and solves one global
least-squares problem. KRVFL is the kernel pipeline with unsupervised nodes
and a fixed node count (no early stopping) -- flipping its ``supervisory``
switch reproduces the supervised trainer exactly, which the test suite uses
as a code-path identity check. RBFN places Gaussian bumps on randomly chosen
training rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .basis import (ScnModel, SupervisoryConfig, TrainTrace,
                    draw_candidates, eval_nodes)
from .data import Dataset, Split, subset
from .kernel import KernelConfig
from .linalg import least_squares
from .model import KscnModel, grow_kernel_model

log = logging.getLogger("kscn.baselines")


class BadCenterCount(ValueError):
    """Requested more RBF centers than training rows (or fewer than one)."""


@dataclass
class RvflModel(ScnModel):
    model_type: str = "rvfl"


@dataclass
class KrvflModel(KscnModel):
    model_type: str = "krvfl"


@dataclass
class RbfnModel:
    """Gaussian design on sampled training-row centers, least-squares weights."""

    centers: NDArray[np.float64]  # (k, m), rows of normalized training data
    c: float
    beta: NDArray[np.float64]     # (k, M)
    norm_stats: NDArray[np.float64] | None
    m: int
    n_outputs: int
    model_type: str = "rbfn"

    def predict_normalized(self, Xn: NDArray[np.float64]) -> NDArray[np.float64]:
        return rbf_design(Xn, self.centers, self.c) @ self.beta


def rbf_design(X: NDArray[np.float64], centers: NDArray[np.float64], c: float) -> NDArray[np.float64]:
    """Phi[i, j] = exp(-||x_i - center_j||^2 / c)."""
    a = np.sum(X * X, axis=1)
    b = np.sum(centers * centers, axis=1)
    D = a[:, None] + b[None, :] - 2.0 * (X @ centers.T)
    np.maximum(D, 0.0, out=D)
    return np.exp(-D / c)


def train_rvfl(d: Dataset, s: Split, L: int, gamma: float,
               seed: int | np.random.Generator) -> RvflModel:
    """Draw L nodes uniformly in +-gamma and refit output weights once."""
    if L < 1:
        raise ValueError("L must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Xtr, Ytr = subset(d, s.train_idx)
    nodes = draw_candidates(d.m, gamma, L, rng)
    H = eval_nodes(nodes, Xtr)
    beta = least_squares(H, Ytr)
    return RvflModel(nodes=nodes, beta=beta, norm_stats=d.norm_stats,
                     m=d.m, n_outputs=d.n_outputs)


def unsupervised_node_source(m: int, gamma: float):
    """Node drawer for the kernel pipeline that ignores the residual."""
    def source(step: int, residual, rng: np.random.Generator):
        node = draw_candidates(m, gamma, 1, rng)[0]
        return node, None
    return source


def train_krvfl(d: Dataset, s: Split, L: int, gamma: float, kc: KernelConfig,
                seed: int | np.random.Generator,
                supervisory: SupervisoryConfig | None = None
                ) -> tuple[KrvflModel, TrainTrace]:
    """Kernel pipeline with unsupervised nodes and a fixed node count.

    When ``supervisory`` is given the node search and early stopping of the
    supervised trainer are used instead; the resulting node sequence is then
    identical to the supervised model under a shared generator.
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Xtr, Ytr = subset(d, s.train_idx)
    Xv, Yv = subset(d, s.val_idx)
    sup = supervisory if supervisory is not None else SupervisoryConfig()
    if supervisory is not None:
        res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng,
                                patience=sup.patience)
        kept = res.trace.best_step
        nodes, alpha = res.nodes[:kept], res.best_alpha
    else:
        res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng,
                                node_source=unsupervised_node_source(d.m, gamma),
                                l_limit=L, patience=None)
        nodes, alpha = res.nodes, res.final_alpha
    model = KrvflModel(nodes=nodes, kernel=kc, alpha=alpha, x_train=Xtr.copy(),
                       norm_stats=d.norm_stats, m=d.m, n_outputs=d.n_outputs)
    return model, res.trace


def train_rbfn(d: Dataset, s: Split, k: int, c: float,
               seed: int | np.random.Generator) -> RbfnModel:
    """Sample k centers without replacement from training rows; fit by least squares."""
    Xtr, Ytr = subset(d, s.train_idx)
    if not 1 <= k <= Xtr.shape[0]:
        raise BadCenterCount(f"k must lie in [1, {Xtr.shape[0]}], got {k}")
    if c <= 0:
        raise ValueError("kernel width c must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.permutation(Xtr.shape[0])[:k]
    centers = Xtr[idx].copy()
    beta = least_squares(rbf_design(Xtr, centers, c), Ytr)
    return RbfnModel(centers=centers, c=c, beta=beta, norm_stats=d.norm_stats,
                     m=d.m, n_outputs=d.n_outputs)
