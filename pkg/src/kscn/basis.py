"""Random hidden-node generation and the supervisory admissibility machinery.

A candidate node (w, b) produces the column h = tanh(X w + b). The node is
admissible against a residual matrix E when, for every output q,

    score_q = <e_q, h>^2 / <h, h> - (1 - r - mu_L) * <e_q, e_q>  >  0

with contraction factor 0 < r < 1 and slack mu_L -> 0. Candidate search
escalates r through ``r_sequence`` and the sampling half-range through
``gamma_pool``, stopping at the first tier that yields an admissible node;
among those the node maximizing the summed score wins (lowest index on ties).

This module also houses the plain SCN baseline built on the same machinery:
nodes accepted one at a time against the linear residual, output weights refit
globally after each addition.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .data import Dataset, Split, subset
from .linalg import least_squares

log = logging.getLogger("kscn.basis")

DEFAULT_GAMMA_POOL = (0.5, 1.0, 5.0, 10.0, 30.0, 50.0, 100.0, 150.0, 200.0, 250.0)
DEFAULT_R_SEQUENCE = (0.9, 0.99, 0.999, 0.9999, 0.99999)


class DegenerateCandidate(ValueError):
    """Candidate output column has zero norm."""


class NoAdmissibleNode(Exception):
    """Every (r, gamma) tier was exhausted without an admissible candidate.

    Signals graceful termination of incremental training, not a failure.
    """


@dataclass(frozen=True)
class HiddenNode:
    """One random node: weights, bias, and the half-range it was drawn from."""

    w: NDArray[np.float64]
    b: float
    gamma: float | None = None


@dataclass(frozen=True)
class SupervisoryConfig:
    """Knobs of the candidate search and the incremental training loop."""

    gamma_pool: tuple[float, ...] = DEFAULT_GAMMA_POOL
    r_sequence: tuple[float, ...] = DEFAULT_R_SEQUENCE
    candidates_per_step: int = 50
    l_max: int = 100
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.gamma_pool or any(g <= 0 for g in self.gamma_pool):
            raise ValueError("gamma_pool entries must be positive")
        if not self.r_sequence or any(not 0 < r < 1 for r in self.r_sequence):
            raise ValueError("r_sequence entries must lie in (0, 1)")
        if self.candidates_per_step < 1:
            raise ValueError("candidates_per_step must be >= 1")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def slack_term(l_index: int, r: float) -> float:
    """Non-negative slack sequence mu_L = (1 - r) / (L + 1); decays to zero."""
    return (1.0 - r) / (l_index + 1)


def eval_node(node: HiddenNode, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """tanh(X w + b) as a length-n column."""
    if X.shape[1] != node.w.shape[0]:
        raise ValueError(f"node expects {node.w.shape[0]} features, got {X.shape[1]}")
    return np.tanh(X @ node.w + node.b)


def eval_nodes(nodes, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Stack node outputs into an (n, L) matrix; empty (n, 0) for no nodes."""
    if not nodes:
        return np.empty((X.shape[0], 0))
    W = np.stack([nd.w for nd in nodes])
    b = np.array([nd.b for nd in nodes])
    return np.tanh(X @ W.T + b[None, :])


def draw_candidates(m: int, gamma: float, count: int,
                    rng: np.random.Generator) -> list[HiddenNode]:
    """i.i.d. uniform draws of (w, b) on [-gamma, gamma]^(m+1)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    arr = rng.uniform(-gamma, gamma, size=(count, m + 1))
    return [HiddenNode(w=arr[i, :m].copy(), b=float(arr[i, m]), gamma=gamma)
            for i in range(count)]


def xi_score(e_q: NDArray[np.float64], h: NDArray[np.float64],
             r: float, mu: float) -> float:
    """Admissibility score of one candidate column against one residual column."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if not 0 <= mu <= 1 - r:
        raise ValueError("mu must lie in [0, 1 - r]")
    hh = float(h @ h)
    if hh == 0.0:
        raise DegenerateCandidate("candidate column has zero norm")
    eh = float(e_q @ h)
    return eh * eh / hh - (1.0 - r - mu) * float(e_q @ e_q)


def _score_block(E: NDArray[np.float64], H: NDArray[np.float64],
                 r: float, mu: float) -> NDArray[np.float64]:
    """Vectorized scores: (M, T) for residual (n, M) against candidates (n, T)."""
    hh = np.sum(H * H, axis=0)
    eh = E.T @ H
    ee = np.sum(E * E, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = eh * eh / hh[None, :] - (1.0 - r - mu) * ee[:, None]
    xi[:, hh == 0.0] = -np.inf
    return xi


def configure_next_node(X: NDArray[np.float64], residual: NDArray[np.float64],
                        l_index: int, config: SupervisoryConfig,
                        rng: np.random.Generator) -> tuple[HiddenNode, NDArray[np.float64]]:
    """Search the (r, gamma) tiers for the best admissible node.

    Returns the winning node and its per-output score vector. Raises
    NoAdmissibleNode once every tier is exhausted. Candidates whose output
    column is constant are rejected outright.
    """
    if not np.any(residual):
        raise ValueError("residual is identically zero; nothing to configure")
    m = X.shape[1]
    T = config.candidates_per_step
    for r in config.r_sequence:
        mu = slack_term(l_index, r)
        for gamma in config.gamma_pool:
            arr = rng.uniform(-gamma, gamma, size=(T, m + 1))
            H = np.tanh(X @ arr[:, :m].T + arr[None, :, m])
            usable = np.ptp(H, axis=0) > 0.0
            xi = _score_block(residual, H, r, mu)
            admissible = usable & np.all(xi > 0.0, axis=0)
            if np.any(admissible):
                sums = np.where(admissible, xi.sum(axis=0), -np.inf)
                j = int(np.argmax(sums))
                node = HiddenNode(w=arr[j, :m].copy(), b=float(arr[j, m]), gamma=gamma)
                return node, xi[:, j].copy()
    raise NoAdmissibleNode(f"no admissible candidate for node {l_index}")


@dataclass(frozen=True)
class StepRecord:
    """One accepted node: index, per-output scores, residual and validation
    norms, patience counter after the step, elapsed milliseconds."""

    l_index: int
    scores: NDArray[np.float64] | None
    train_residual_norm: float
    val_error_norm: float
    patience: int
    ms: float = 0.0


@dataclass
class TrainTrace:
    """Baseline record (L=0) plus exactly one record per accepted node."""

    baseline: StepRecord
    steps: list[StepRecord] = field(default_factory=list)
    stopped_by: str = ""  # "patience" | "l_max" | "no_admissible_node" | "zero_residual"
    best_step: int = 0

    @property
    def records(self) -> list[StepRecord]:
        return [self.baseline, *self.steps]

    def val_curve(self) -> list[float]:
        return [rec.val_error_norm for rec in self.records]


class PatienceCounter:
    """Early-stopping bookkeeping: the counter advances on every step whose
    squared validation error fails to improve on the previous step's, and is
    never decremented."""

    def __init__(self, p_max: int, baseline_sq: float):
        self.p_max = p_max
        self.p = 0
        self._prev = baseline_sq

    def update(self, val_sq: float) -> bool:
        """Record a step; returns True when training should stop."""
        if val_sq >= self._prev:
            self.p += 1
        self._prev = val_sq
        return self.p >= self.p_max


@dataclass
class ScnModel:
    """Incrementally configured random basis with globally refit output weights."""

    nodes: list[HiddenNode]
    beta: NDArray[np.float64]  # (L, M)
    norm_stats: NDArray[np.float64] | None
    m: int
    n_outputs: int
    model_type: str = "scn"

    def predict_normalized(self, Xn: NDArray[np.float64]) -> NDArray[np.float64]:
        if not self.nodes:
            return np.zeros((Xn.shape[0], self.n_outputs))
        return eval_nodes(self.nodes, Xn) @ self.beta


@dataclass
class ScnGrowth:
    """Raw outcome of the incremental SCN loop (full trace plus coefficients)."""

    nodes: list[HiddenNode]
    trace: TrainTrace
    best_beta: NDArray[np.float64]
    val_sq: list[float]
    betas: list[NDArray[np.float64]] | None


def grow_scn(Xtr: NDArray[np.float64], Ytr: NDArray[np.float64],
             Xv: NDArray[np.float64], Yv: NDArray[np.float64],
             config: SupervisoryConfig, rng: np.random.Generator,
             patience: int | None = None,
             collect_betas: bool = False) -> ScnGrowth:
    """Incremental SCN loop; ``patience=None`` disables early stopping."""
    nodes: list[HiddenNode] = []
    H = np.empty((Xtr.shape[0], 0))
    Hv = np.empty((Xv.shape[0], 0))
    beta = np.zeros((0, Ytr.shape[1]))
    residual = Ytr.copy()

    base_val = float(np.sum(Yv * Yv))
    trace = TrainTrace(baseline=StepRecord(
        l_index=0, scores=None,
        train_residual_norm=float(np.linalg.norm(residual)),
        val_error_norm=float(np.sqrt(base_val)), patience=0))
    val_sq = [base_val]
    betas = [beta.copy()] if collect_betas else None
    best = (base_val, 0, beta)
    counter = PatienceCounter(patience, base_val) if patience is not None else None

    if not np.any(residual):
        trace.stopped_by = "zero_residual"
        return ScnGrowth(nodes=[], trace=trace, best_beta=beta,
                         val_sq=val_sq, betas=betas)

    stopped_by = "l_max"
    for L in range(1, config.l_max + 1):
        t0 = time.perf_counter()
        try:
            node, scores = configure_next_node(Xtr, residual, L, config, rng)
        except NoAdmissibleNode:
            stopped_by = "no_admissible_node"
            break
        nodes.append(node)
        H = np.column_stack([H, eval_node(node, Xtr)])
        Hv = np.column_stack([Hv, eval_node(node, Xv)])
        beta = least_squares(H, Ytr)
        residual = Ytr - H @ beta
        v = float(np.sum((Yv - Hv @ beta) ** 2))
        val_sq.append(v)
        stop = counter.update(v) if counter is not None else False
        trace.steps.append(StepRecord(
            l_index=L, scores=scores,
            train_residual_norm=float(np.linalg.norm(residual)),
            val_error_norm=float(np.sqrt(v)),
            patience=counter.p if counter is not None else 0,
            ms=(time.perf_counter() - t0) * 1e3))
        if collect_betas:
            betas.append(beta.copy())
        if v < best[0]:
            best = (v, L, beta.copy())
        if stop:
            stopped_by = "patience"
            break
        if not np.any(residual):
            stopped_by = "zero_residual"
            break

    trace.stopped_by = stopped_by
    trace.best_step = best[1]
    return ScnGrowth(nodes=nodes, trace=trace, best_beta=best[2],
                     val_sq=val_sq, betas=betas)


def train_scn(d: Dataset, s: Split, config: SupervisoryConfig,
              rng: np.random.Generator | None = None) -> tuple[ScnModel, TrainTrace]:
    """Grow an SCN on the training rows with validation-based early stopping.

    The returned model is the best-validation snapshot; the trace carries one
    record per accepted node plus the L=0 baseline.
    """
    if len(s.train_idx) == 0 or len(s.val_idx) == 0:
        raise ValueError("train and validation partitions must be non-empty")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    Xtr, Ytr = subset(d, s.train_idx)
    Xv, Yv = subset(d, s.val_idx)
    res = grow_scn(Xtr, Ytr, Xv, Yv, config, rng, patience=config.patience)
    best_l = res.trace.best_step
    log.info("scn: stopped by %s after %d nodes, kept %d",
             res.trace.stopped_by, len(res.nodes), best_l)
    model = ScnModel(nodes=res.nodes[:best_l], beta=res.best_beta,
                     norm_stats=d.norm_stats, m=d.m, n_outputs=d.n_outputs)
    return model, res.trace


def simulate_patience(val_sq: list[float], p_max: int) -> tuple[int, int]:
    """Replay the patience rule over a recorded squared-validation curve.

    Returns (stop_step, best_step): the step training would stop at, and the
    lowest-error step within [0, stop_step]. Matches the live loop exactly.
    """
    counter = PatienceCounter(p_max, val_sq[0])
    stop = len(val_sq) - 1
    for L in range(1, len(val_sq)):
        if counter.update(val_sq[L]):
            stop = L
            break
    window = val_sq[:stop + 1]
    return stop, int(np.argmin(window))
