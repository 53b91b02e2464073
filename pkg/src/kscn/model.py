"""Kernel SCN training loop, the deployable model, and JSON persistence.

Training interleaves three ingredients per step: configure one admissible node
against the kernel residual, extend the Gram with that node's training column,
and refit the ridge solution. Validation error is tracked for early stopping
(the patience counter advances on every non-improving step and never resets);
the returned model is the snapshot at the lowest recorded validation error.

Before the first node exists the kernel is built over the raw inputs alone, so
the step-one residual is already kernel-based.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .basis import (HiddenNode, NoAdmissibleNode, PatienceCounter, ScnModel,
                    StepRecord, SupervisoryConfig, TrainTrace,
                    configure_next_node, eval_node, eval_nodes)
from .data import Dataset, Split, apply_norm_stats, subset
from .kernel import (KernelConfig, cross_gram, cross_sqdist_extend,
                     gram_build, gram_extend, kernel_predict, kernel_ridge_fit)

log = logging.getLogger("kscn.model")


class DimensionMismatch(ValueError):
    """Prediction input width differs from the training width."""


class EmptyValidation(ValueError):
    """Training requires a non-empty validation partition."""


class SchemaError(ValueError):
    """Model file does not match the expected JSON layout; names the field."""


class IoError(OSError):
    """Model file could not be read or written."""


@dataclass
class KscnModel:
    """Everything needed to evaluate the test kernel on new data."""

    nodes: list[HiddenNode]
    kernel: KernelConfig
    alpha: NDArray[np.float64]        # (n_train, M)
    x_train: NDArray[np.float64]      # (n_train, m), normalized
    norm_stats: NDArray[np.float64] | None
    m: int
    n_outputs: int
    model_type: str = "kscn"

    def predict_normalized(self, Xn: NDArray[np.float64]) -> NDArray[np.float64]:
        H_tr = eval_nodes(self.nodes, self.x_train)
        H_t = eval_nodes(self.nodes, Xn)
        K_t = cross_gram((H_tr, self.x_train), (H_t, Xn), self.kernel.c)
        return kernel_predict(K_t, self.alpha)


@dataclass
class GrowthResult:
    """Raw outcome of the incremental kernel training loop."""

    nodes: list[HiddenNode]
    trace: TrainTrace
    best_alpha: NDArray[np.float64]
    final_alpha: NDArray[np.float64]
    val_sq: list[float]
    alphas: list[NDArray[np.float64]] | None  # per step incl. L=0, if collected


def grow_kernel_model(Xtr: NDArray[np.float64], Ytr: NDArray[np.float64],
                      Xv: NDArray[np.float64], Yv: NDArray[np.float64],
                      sup: SupervisoryConfig, kc: KernelConfig,
                      rng: np.random.Generator,
                      node_source=None,
                      l_limit: int | None = None,
                      patience: int | None = None,
                      collect_alphas: bool = False) -> GrowthResult:
    """Shared growth loop for the supervised model and its unsupervised twin.

    ``node_source(step, residual, rng) -> (node, scores)`` defaults to the
    supervisory candidate search; pass a drawer that ignores the residual to
    get the unsupervised variant. ``patience=None`` disables early stopping
    (the loop then runs to ``l_limit`` or node exhaustion).
    """
    if Xv.shape[0] == 0:
        raise EmptyValidation("validation partition is empty")
    if node_source is None:
        def node_source(step, residual, gen):
            return configure_next_node(Xtr, residual, step, sup, gen)
    l_limit = sup.l_max if l_limit is None else l_limit

    gram = gram_build(None, Xtr, kc.c)
    sol = kernel_ridge_fit(gram.K, Ytr, kc.tau)
    Dt = np.empty((Xv.shape[0], Xtr.shape[0]))
    a = np.sum(Xv * Xv, axis=1)
    b = np.sum(Xtr * Xtr, axis=1)
    Dt[:] = a[:, None] + b[None, :] - 2.0 * (Xv @ Xtr.T)
    np.maximum(Dt, 0.0, out=Dt)
    val_sq = float(np.sum((Yv - np.exp(-Dt / kc.c) @ sol.alpha) ** 2))

    trace = TrainTrace(baseline=StepRecord(
        l_index=0, scores=None,
        train_residual_norm=float(np.linalg.norm(Ytr - sol.fitted)),
        val_error_norm=float(np.sqrt(val_sq)), patience=0))
    nodes: list[HiddenNode] = []
    val_curve = [val_sq]
    alphas = [sol.alpha.copy()] if collect_alphas else None
    best = (val_sq, 0, sol.alpha.copy())
    counter = PatienceCounter(patience, val_sq) if patience is not None else None

    stopped_by = "l_max"
    for L in range(1, l_limit + 1):
        t0 = time.perf_counter()
        residual = Ytr - gram.K @ sol.alpha
        if not np.any(residual):
            stopped_by = "zero_residual"
            break
        try:
            node, scores = node_source(L, residual, rng)
        except NoAdmissibleNode:
            stopped_by = "no_admissible_node"
            break
        nodes.append(node)
        h_tr = eval_node(node, Xtr)
        gram = gram_extend(gram, h_tr, kc.c)
        sol = kernel_ridge_fit(gram.K, Ytr, kc.tau)
        Dt = cross_sqdist_extend(Dt, eval_node(node, Xv), h_tr)
        val_sq = float(np.sum((Yv - np.exp(-Dt / kc.c) @ sol.alpha) ** 2))
        val_curve.append(val_sq)
        stop = counter.update(val_sq) if counter is not None else False
        trace.steps.append(StepRecord(
            l_index=L, scores=scores,
            train_residual_norm=float(np.linalg.norm(Ytr - sol.fitted)),
            val_error_norm=float(np.sqrt(val_sq)),
            patience=counter.p if counter is not None else 0,
            ms=(time.perf_counter() - t0) * 1e3))
        if collect_alphas:
            alphas.append(sol.alpha.copy())
        if val_sq < best[0]:
            best = (val_sq, L, sol.alpha.copy())
        if stop:
            stopped_by = "patience"
            break

    trace.stopped_by = stopped_by
    trace.best_step = best[1]
    return GrowthResult(nodes=nodes, trace=trace, best_alpha=best[2],
                        final_alpha=sol.alpha, val_sq=val_curve, alphas=alphas)


def train_kscn(d: Dataset, s: Split, sup: SupervisoryConfig, kc: KernelConfig,
               rng: np.random.Generator | None = None) -> tuple[KscnModel, TrainTrace]:
    """Train on the split's training rows with early stopping on its validation
    rows; returns the best-validation snapshot and the full trace."""
    if len(s.train_idx) == 0:
        raise ValueError("training partition is empty")
    if len(s.val_idx) == 0:
        raise EmptyValidation("validation partition is empty")
    rng = np.random.default_rng(sup.seed) if rng is None else rng
    Xtr, Ytr = subset(d, s.train_idx)
    Xv, Yv = subset(d, s.val_idx)
    res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng, patience=sup.patience)
    best_l = res.trace.best_step
    log.info("kscn: stopped by %s after %d nodes, kept %d",
             res.trace.stopped_by, len(res.nodes), best_l)
    model = KscnModel(nodes=res.nodes[:best_l], kernel=kc, alpha=res.best_alpha,
                      x_train=Xtr.copy(), norm_stats=d.norm_stats,
                      m=d.m, n_outputs=d.n_outputs)
    return model, res.trace


def predict(model, X_new: NDArray[np.float64]) -> NDArray[np.float64]:
    """Normalize raw inputs with the model's stored stats and evaluate it."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
    if X_new.shape[1] != model.m:
        raise DimensionMismatch(
            f"model expects {model.m} input columns, got {X_new.shape[1]}")
    Xn = apply_norm_stats(X_new, model.norm_stats) if model.norm_stats is not None else X_new
    return model.predict_normalized(Xn)


# --- persistence ----------------------------------------------------------

def _nodes_to_json(nodes: list[HiddenNode]) -> list[dict]:
    return [{"w": nd.w.tolist(), "b": nd.b} for nd in nodes]


def _nodes_from_json(items, where: str) -> list[HiddenNode]:
    nodes = []
    for i, it in enumerate(items):
        if not isinstance(it, dict) or "w" not in it or "b" not in it:
            raise SchemaError(f"{where}[{i}]: expected object with 'w' and 'b'")
        nodes.append(HiddenNode(w=np.asarray(it["w"], dtype=np.float64),
                                b=float(it["b"]), gamma=None))
    return nodes


def _stats_field(model) -> list | None:
    return None if model.norm_stats is None else model.norm_stats.tolist()


def model_to_dict(model) -> dict:
    kind = getattr(model, "model_type", None)
    if kind in ("kscn", "krvfl"):
        return {
            "type": kind,
            "m": model.m,
            "M": model.n_outputs,
            "kernel": {"c": model.kernel.c, "tau": model.kernel.tau},
            "nodes": _nodes_to_json(model.nodes),
            "alpha": model.alpha.tolist(),
            "x_train": model.x_train.tolist(),
            "norm_stats": _stats_field(model),
        }
    if kind in ("scn", "rvfl"):
        return {
            "type": kind,
            "m": model.m,
            "M": model.n_outputs,
            "nodes": _nodes_to_json(model.nodes),
            "beta": model.beta.tolist(),
            "norm_stats": _stats_field(model),
        }
    if kind == "rbfn":
        return {
            "type": "rbfn",
            "m": model.m,
            "M": model.n_outputs,
            "c": model.c,
            "centers": model.centers.tolist(),
            "beta": model.beta.tolist(),
            "norm_stats": _stats_field(model),
        }
    raise SchemaError(f"unknown model type {kind!r}")


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"missing field '{key}'")
    return doc[key]


def model_from_dict(doc: dict):
    from .baselines import RbfnModel  # local import to avoid a cycle

    if not isinstance(doc, dict):
        raise SchemaError("top level: expected a JSON object")
    kind = _require(doc, "type")
    m = int(_require(doc, "m"))
    M = int(_require(doc, "M"))
    stats = doc.get("norm_stats")
    norm_stats = None if stats is None else np.asarray(stats, dtype=np.float64)
    if norm_stats is not None and (norm_stats.ndim != 2 or norm_stats.shape != (m, 2)):
        raise SchemaError(f"norm_stats: expected shape ({m}, 2)")
    try:
        if kind in ("kscn", "krvfl"):
            kern = _require(doc, "kernel")
            if not isinstance(kern, dict):
                raise SchemaError("kernel: expected object with 'c' and 'tau'")
            kc = KernelConfig(c=float(_require(kern, "c")), tau=float(_require(kern, "tau")))
            nodes = _nodes_from_json(_require(doc, "nodes"), "nodes")
            alpha = np.asarray(_require(doc, "alpha"), dtype=np.float64)
            x_train = np.asarray(_require(doc, "x_train"), dtype=np.float64)
            if x_train.ndim != 2 or x_train.shape[1] != m:
                raise SchemaError(f"x_train: expected (n, {m}) matrix")
            if alpha.ndim != 2 or alpha.shape != (x_train.shape[0], M):
                raise SchemaError(f"alpha: expected ({x_train.shape[0]}, {M}) matrix")
            return KscnModel(nodes=nodes, kernel=kc, alpha=alpha, x_train=x_train,
                             norm_stats=norm_stats, m=m, n_outputs=M, model_type=kind)
        if kind in ("scn", "rvfl"):
            nodes = _nodes_from_json(_require(doc, "nodes"), "nodes")
            beta = np.asarray(_require(doc, "beta"), dtype=np.float64)
            if beta.size == 0:
                beta = beta.reshape(0, M)
            if beta.ndim != 2 or beta.shape != (len(nodes), M):
                raise SchemaError(f"beta: expected ({len(nodes)}, {M}) matrix")
            return ScnModel(nodes=nodes, beta=beta, norm_stats=norm_stats,
                            m=m, n_outputs=M, model_type=kind)
        if kind == "rbfn":
            centers = np.asarray(_require(doc, "centers"), dtype=np.float64)
            beta = np.asarray(_require(doc, "beta"), dtype=np.float64)
            c = float(_require(doc, "c"))
            if centers.ndim != 2 or centers.shape[1] != m:
                raise SchemaError(f"centers: expected (k, {m}) matrix")
            if beta.ndim != 2 or beta.shape != (centers.shape[0], M):
                raise SchemaError(f"beta: expected ({centers.shape[0]}, {M}) matrix")
            return RbfnModel(centers=centers, c=c, beta=beta, norm_stats=norm_stats,
                             m=m, n_outputs=M)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"type: unknown model type {kind!r}")


def save_model(model, path) -> None:
    doc = model_to_dict(model)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return model_from_dict(doc)
