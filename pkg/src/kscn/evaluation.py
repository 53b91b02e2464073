"""Metrics, Gram-spectrum diagnostics, multi-trial benchmarks, and reports.

The trial harness follows a fixed protocol: hyperparameters are selected once
on the validation partition (deterministic seeds), then every trial retrains
from scratch with seed = base_seed + trial index. Reports are written as CSV
plus a JSON mirror carrying the aggregates; all files are written atomically
and are byte-reproducible for a fixed configuration (timing columns are zero
unless timing capture is explicitly enabled).
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .basis import (ScnModel, SupervisoryConfig, grow_scn, simulate_patience,
                    train_scn)
from .baselines import (rbf_design, train_krvfl, train_rbfn, train_rvfl,
                        unsupervised_node_source)
from .data import Dataset, Split, subset
from .kernel import KernelConfig, gram_build
from .linalg import least_squares, sym_eigvals
from .model import KscnModel, grow_kernel_model, predict, train_kscn

log = logging.getLogger("kscn.evaluation")

TOPK_LEVELS = (1, 3, 5, 10)
KERNEL_MODELS = ("kscn", "krvfl", "rbfn")
ALL_MODELS = ("kscn", "scn", "rvfl", "krvfl", "rbfn")


# --- metrics ---------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    """Pooled RMSE and coefficient of determination; r2 is None (with a
    reason) when the target variance is zero."""

    rmse: float
    r2: float | None
    r2_reason: str | None = None


def compute_metrics(y_true, y_pred) -> Metrics:
    Yt = np.atleast_2d(np.asarray(y_true, dtype=np.float64))
    Yp = np.atleast_2d(np.asarray(y_pred, dtype=np.float64))
    if Yt.shape != Yp.shape:
        raise ValueError(f"shape mismatch: {Yt.shape} vs {Yp.shape}")
    if Yt.shape[0] < 1:
        raise ValueError("need at least one row")
    sq = float(np.sum((Yt - Yp) ** 2))
    rmse = float(np.sqrt(sq / Yt.size))
    tot = float(np.sum((Yt - Yt.mean(axis=0)) ** 2))
    if tot == 0.0:
        return Metrics(rmse=rmse, r2=None, r2_reason="zero target variance")
    return Metrics(rmse=rmse, r2=1.0 - sq / tot)


# --- spectrum diagnostics ---------------------------------------------------

@dataclass
class SpectrumReport:
    """Descending eigenvalues with top-k energy fractions and effective rank."""

    eigvals: NDArray[np.float64]
    energy_topk: dict[int, float]
    effective_rank: float


def spectrum(K: NDArray[np.float64]) -> SpectrumReport:
    """Eigenvalue concentration summary of a PSD Gram matrix."""
    vals = sym_eigvals(K)
    n = len(vals)
    floor = -1e-8 * max(float(vals.sum()), 1.0)
    if n and float(vals.min()) < floor:
        raise ValueError(f"matrix is not PSD within tolerance (min eig {vals.min():.3e})")
    ev = np.clip(vals, 0.0, None)
    total = float(ev.sum())
    if total <= 0.0:
        raise ValueError("zero trace; not a Gram matrix")
    fractions = np.cumsum(ev) / total
    topk = {k: float(fractions[min(k, n) - 1]) for k in TOPK_LEVELS if n >= 1}
    p = ev[ev > 0] / total
    eff_rank = float(np.exp(-np.sum(p * np.log(p))))
    return SpectrumReport(eigvals=ev, energy_topk=topk, effective_rank=eff_rank)


def spectrum_comparison(d: Dataset, s: Split, sup: SupervisoryConfig,
                        kc: KernelConfig, seeds) -> list[dict[str, SpectrumReport]]:
    """Per seed, compare three Grams over the training rows at the same width:
    inputs only (zero nodes), L unsupervised nodes, and the L nodes accepted by
    a supervised run. Node counts are matched within each seed."""
    Xtr, Ytr = subset(d, s.train_idx)
    out = []
    for seed in seeds:
        model, _ = train_kscn(d, s, sup, kc, rng=np.random.default_rng(int(seed)))
        L = len(model.nodes)
        rng = np.random.default_rng([int(seed), 1])  # stream disjoint from training
        source = _pool_node_source(d.m, sup.gamma_pool)
        unsup = [source(j, None, rng)[0] for j in range(L)]
        from .basis import eval_nodes
        reports = {
            "original": spectrum(gram_build(None, Xtr, kc.c).K),
            "unsupervised": spectrum(gram_build(eval_nodes(unsup, Xtr), Xtr, kc.c).K),
            "supervised": spectrum(gram_build(eval_nodes(model.nodes, Xtr), Xtr, kc.c).K),
        }
        out.append(reports)
    return out


def _pool_node_source(m: int, gamma_pool):
    """Thoroughly random drawer: each node's half-range sampled from the pool."""
    from .basis import draw_candidates

    def source(step, residual, rng: np.random.Generator):
        gamma = float(gamma_pool[int(rng.integers(len(gamma_pool)))])
        return draw_candidates(m, gamma, 1, rng)[0], None
    return source


# --- experiment bundle -------------------------------------------------------

@dataclass
class Experiment:
    """Raw and normalized views of one dataset plus its partition."""

    raw: Dataset
    data: Dataset   # normalized; norm_stats set
    split: Split

    def partitions(self):
        return {
            "train": (self.raw.X[self.split.train_idx], self.raw.Y[self.split.train_idx]),
            "val": (self.raw.X[self.split.val_idx], self.raw.Y[self.split.val_idx]),
            "test": (self.raw.X[self.split.test_idx], self.raw.Y[self.split.test_idx]),
        }


@dataclass
class ModelSpec:
    """A model kind with its resolved (post-search) hyperparameters."""

    kind: str
    sup: SupervisoryConfig | None = None
    kernel: KernelConfig | None = None
    L: int | None = None
    gamma: float | None = None
    k: int | None = None
    c: float | None = None


def train_for_trial(exp: Experiment, spec: ModelSpec, seed: int):
    """Train one model instance with an isolated generator."""
    rng = np.random.default_rng(seed)
    if spec.kind == "kscn":
        model, trace = train_kscn(exp.data, exp.split, spec.sup, spec.kernel, rng=rng)
        return model, trace
    if spec.kind == "scn":
        model, trace = train_scn(exp.data, exp.split, spec.sup, rng=rng)
        return model, trace
    if spec.kind == "rvfl":
        return train_rvfl(exp.data, exp.split, spec.L, spec.gamma, rng), None
    if spec.kind == "krvfl":
        model, trace = train_krvfl(exp.data, exp.split, spec.L, spec.gamma,
                                   spec.kernel, rng)
        return model, trace
    if spec.kind == "rbfn":
        return train_rbfn(exp.data, exp.split, spec.k, spec.c, rng), None
    raise ValueError(f"unknown model kind {spec.kind!r}")


def node_count(model) -> int:
    if hasattr(model, "nodes"):
        return len(model.nodes)
    if hasattr(model, "centers"):
        return int(model.centers.shape[0])
    return 0


# --- hyperparameter selection ------------------------------------------------

def default_c_grid() -> list[float]:
    return [float(v) for v in np.logspace(-2.0, 2.0, 41)]


DEFAULT_TAU_GRID = (0.1, 0.01, 0.001, 0.0001)


def select_kscn_params(exp: Experiment, sup: SupervisoryConfig,
                       c_grid, tau_grid, base_seed: int,
                       n_seeds: int = 3, threads: int | None = None
                       ) -> tuple[KernelConfig, float]:
    """Grid-search (c, tau) by mean validation RMSE of the trained model over
    a few deterministic seeds; ties break toward the earlier grid point."""
    Xtr, Ytr = subset(exp.data, exp.split.train_idx)
    Xv, Yv = subset(exp.data, exp.split.val_idx)
    denom = float(np.sqrt(Yv.size))
    combos = [(float(tau), float(c)) for tau in tau_grid for c in c_grid]

    def score(combo):
        tau, c = combo
        kc = KernelConfig(c=c, tau=tau)
        vals = []
        for j in range(n_seeds):
            rng = np.random.default_rng(base_seed + j)
            res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng,
                                    patience=sup.patience)
            vals.append(np.sqrt(res.val_sq[res.trace.best_step]) / denom)
        return float(np.mean(vals))

    scores = _parallel_map(score, combos, threads)
    i = int(np.argmin(scores))
    tau, c = combos[i]
    log.info("kscn search: c=%.6g tau=%.6g val_rmse=%.6g", c, tau, scores[i])
    return KernelConfig(c=c, tau=tau), float(scores[i])


def select_rvfl_params(exp: Experiment, l_max: int, gamma_pool,
                       seed: int) -> tuple[int, float, float]:
    """Search node count 1..l_max and the half-range pool on validation RMSE."""
    Xtr, Ytr = subset(exp.data, exp.split.train_idx)
    Xv, Yv = subset(exp.data, exp.split.val_idx)
    best = None
    rng = np.random.default_rng(seed)
    from .basis import draw_candidates, eval_nodes
    for gamma in gamma_pool:
        nodes = draw_candidates(exp.data.m, float(gamma), l_max, rng)
        H = eval_nodes(nodes, Xtr)
        Hv = eval_nodes(nodes, Xv)
        for L in range(1, l_max + 1):
            beta = least_squares(H[:, :L], Ytr)
            v = compute_metrics(Yv, Hv[:, :L] @ beta).rmse
            if best is None or v < best[0]:
                best = (v, L, float(gamma))
    v, L, gamma = best
    log.info("rvfl search: L=%d gamma=%g val_rmse=%.6g", L, gamma, v)
    return L, gamma, v


def select_rbfn_params(exp: Experiment, k_max: int, c_grid,
                       seed: int, threads: int | None = None
                       ) -> tuple[int, float, float]:
    """Search center count and width; one seeded center draw shared by the grid."""
    Xtr, Ytr = subset(exp.data, exp.split.train_idx)
    Xv, Yv = subset(exp.data, exp.split.val_idx)
    k_cap = min(k_max, Xtr.shape[0])
    perm = np.random.default_rng(seed).permutation(Xtr.shape[0])[:k_cap]
    centers = Xtr[perm]

    def score(c):
        Phi = rbf_design(Xtr, centers, c)
        Phiv = rbf_design(Xv, centers, c)
        best_local = None
        for k in range(1, k_cap + 1):
            beta = least_squares(Phi[:, :k], Ytr)
            v = compute_metrics(Yv, Phiv[:, :k] @ beta).rmse
            if best_local is None or v < best_local[0]:
                best_local = (v, k)
        return best_local

    results = _parallel_map(score, [float(c) for c in c_grid], threads)
    i = int(np.argmin([r[0] for r in results]))
    v, k = results[i]
    c = float(c_grid[i])
    log.info("rbfn search: k=%d c=%.6g val_rmse=%.6g", k, c, v)
    return k, c, float(v)


def select_krvfl_params(exp: Experiment, gamma: float, l_max: int,
                        c_grid, tau_grid, seed: int,
                        threads: int | None = None
                        ) -> tuple[KernelConfig, int, float]:
    """Search (c, tau, L) using one incremental unsupervised run per (c, tau)."""
    Xtr, Ytr = subset(exp.data, exp.split.train_idx)
    Xv, Yv = subset(exp.data, exp.split.val_idx)
    denom = float(np.sqrt(Yv.size))
    sup = SupervisoryConfig(l_max=l_max)
    combos = [(float(tau), float(c)) for tau in tau_grid for c in c_grid]

    def score(combo):
        tau, c = combo
        kc = KernelConfig(c=c, tau=tau)
        rng = np.random.default_rng(seed)
        res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng,
                                node_source=unsupervised_node_source(exp.data.m, gamma),
                                l_limit=l_max, patience=None)
        curve = np.sqrt(np.asarray(res.val_sq)) / denom
        L = int(np.argmin(curve))
        return float(curve[L]), L

    results = _parallel_map(score, combos, threads)
    i = int(np.argmin([r[0] for r in results]))
    tau, c = combos[i]
    v, L = results[i]
    log.info("krvfl search: c=%.6g tau=%.6g L=%d val_rmse=%.6g", c, tau, L, v)
    return KernelConfig(c=c, tau=tau), L, v


# --- trial harness -----------------------------------------------------------

@dataclass
class TrialRow:
    seed: int
    model: str
    nodes: int
    rmse_train: float
    rmse_val: float
    rmse_test: float
    r2_test: float | None
    ms: float


@dataclass
class TrialReport:
    rows: list[TrialRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)


def _parallel_map(fn, items, threads: int | None):
    workers = threads if threads else (os.cpu_count() or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def aggregate_rows(rows: list[TrialRow]) -> dict:
    """Per-model summary: RMSE mean/std/min/max, R2 mean/std, node stats."""
    agg: dict = {}
    for model in sorted({r.model for r in rows}, key=lambda m: ALL_MODELS.index(m) if m in ALL_MODELS else 99):
        sub = [r for r in rows if r.model == model]
        rmse = np.array([r.rmse_test for r in sub])
        r2 = np.array([r.r2_test for r in sub if r.r2_test is not None])
        nodes = np.array([r.nodes for r in sub])
        agg[model] = {
            "trials": len(sub),
            "rmse_test": {"mean": float(rmse.mean()), "std": float(rmse.std()),
                          "min": float(rmse.min()), "max": float(rmse.max())},
            "r2_test": ({"mean": float(r2.mean()), "std": float(r2.std())}
                        if r2.size else None),
            "nodes": {"mean": float(nodes.mean()), "std": float(nodes.std())},
        }
    return agg


def run_trials(exp: Experiment, specs: list[ModelSpec], n_trials: int,
               base_seed: int, threads: int | None = None,
               timing: bool = False) -> TrialReport:
    """Independent trials per model spec; failed trials are excluded from the
    aggregates and recorded with their error message."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    parts = exp.partitions()

    def one(job):
        spec, i = job
        seed = base_seed + i
        t0 = time.perf_counter()
        try:
            model, _ = _unpack(train_for_trial(exp, spec, seed))
        except Exception as exc:  # noqa: BLE001 - trial isolation is deliberate
            log.warning("trial failed: model=%s seed=%d: %s", spec.kind, seed, exc)
            return ("fail", spec.kind, seed, f"{type(exc).__name__}: {exc}")
        elapsed = (time.perf_counter() - t0) * 1e3
        mets = {name: compute_metrics(Y, predict(model, X))
                for name, (X, Y) in parts.items()}
        return ("ok", TrialRow(
            seed=seed, model=spec.kind, nodes=node_count(model),
            rmse_train=mets["train"].rmse, rmse_val=mets["val"].rmse,
            rmse_test=mets["test"].rmse, r2_test=mets["test"].r2,
            ms=elapsed if timing else 0.0))

    jobs = [(spec, i) for spec in specs for i in range(n_trials)]
    results = _parallel_map(one, jobs, threads)
    report = TrialReport()
    for res in results:
        if res[0] == "ok":
            report.rows.append(res[1])
        else:
            report.failures.append({"model": res[1], "seed": res[2], "error": res[3]})
    if report.rows:
        report.aggregates = aggregate_rows(report.rows)
    return report


def _unpack(trained):
    if isinstance(trained, tuple):
        return trained
    return trained, None


# --- sweeps and the patience study -------------------------------------------

def kernel_sweep(exp: Experiment, spec: ModelSpec, multipliers,
                 n_trials: int, base_seed: int,
                 threads: int | None = None) -> list[dict]:
    """Mean/std test RMSE when the validated width is scaled by each factor.

    Only kernel-based models participate; each multiplier reruns the same
    seeded trials with c' = multiplier * c.
    """
    if spec.kind not in KERNEL_MODELS:
        raise ValueError(f"kernel_sweep needs a kernel model, got {spec.kind!r}")
    if any(m <= 0 for m in multipliers):
        raise ValueError("multipliers must be positive")
    rows = []
    for mult in multipliers:
        scaled = _scale_width(spec, float(mult))
        report = run_trials(exp, [scaled], n_trials, base_seed, threads=threads)
        rmse = np.array([r.rmse_test for r in report.rows])
        if rmse.size == 0:
            raise RuntimeError(f"all trials failed at multiplier {mult}")
        rows.append({"multiplier": float(mult),
                     "mean_rmse": float(rmse.mean()),
                     "std_rmse": float(rmse.std())})
    return rows


def _scale_width(spec: ModelSpec, mult: float) -> ModelSpec:
    if spec.kind in ("kscn", "krvfl"):
        kc = KernelConfig(c=spec.kernel.c * mult, tau=spec.kernel.tau)
        return ModelSpec(kind=spec.kind, sup=spec.sup, kernel=kc,
                         L=spec.L, gamma=spec.gamma)
    return ModelSpec(kind=spec.kind, k=spec.k, c=spec.c * mult)


def patience_study(exp: Experiment, sup: SupervisoryConfig, kc: KernelConfig,
                   p_values, n_trials: int, base_seed: int,
                   threads: int | None = None) -> list[dict]:
    """Early-stopping sensitivity for the supervised pair (kernel and plain).

    One full-length run per seed supplies every patience value: stopping is
    replayed over the recorded validation curve, which matches the live loop
    exactly. Reported node counts are the deployed (best-snapshot) sizes.
    """
    if any(p < 1 for p in p_values):
        raise ValueError("patience values must be >= 1")
    Xtr, Ytr = subset(exp.data, exp.split.train_idx)
    Xv, Yv = subset(exp.data, exp.split.val_idx)
    Xte_raw = exp.raw.X[exp.split.test_idx]
    Yte = exp.raw.Y[exp.split.test_idx]

    def one_kscn(i):
        rng = np.random.default_rng(base_seed + i)
        res = grow_kernel_model(Xtr, Ytr, Xv, Yv, sup, kc, rng,
                                patience=None, collect_alphas=True)
        out = {}
        for p in p_values:
            stop, best = simulate_patience(res.val_sq, p)
            model = KscnModel(nodes=res.nodes[:best], kernel=kc,
                              alpha=res.alphas[best], x_train=Xtr,
                              norm_stats=exp.data.norm_stats,
                              m=exp.data.m, n_outputs=exp.data.n_outputs)
            out[p] = (best, compute_metrics(Yte, predict(model, Xte_raw)).rmse)
        return out

    def one_scn(i):
        rng = np.random.default_rng(base_seed + i)
        res = grow_scn(Xtr, Ytr, Xv, Yv, sup, rng, patience=None,
                       collect_betas=True)
        out = {}
        for p in p_values:
            stop, best = simulate_patience(res.val_sq, p)
            model = ScnModel(nodes=res.nodes[:best], beta=res.betas[best],
                             norm_stats=exp.data.norm_stats,
                             m=exp.data.m, n_outputs=exp.data.n_outputs)
            out[p] = (best, compute_metrics(Yte, predict(model, Xte_raw)).rmse)
        return out

    kscn_runs = _parallel_map(one_kscn, list(range(n_trials)), threads)
    scn_runs = _parallel_map(one_scn, list(range(n_trials)), threads)
    rows = []
    for p in p_values:
        for name, runs in (("kscn", kscn_runs), ("scn", scn_runs)):
            nodes = np.array([r[p][0] for r in runs], dtype=float)
            rmse = np.array([r[p][1] for r in runs])
            rows.append({"p_max": int(p), "model": name,
                         "rmse_mean": float(rmse.mean()), "rmse_std": float(rmse.std()),
                         "nodes_mean": float(nodes.mean()), "nodes_std": float(nodes.std())})
    return rows


# --- report emission ----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))  # plain-float repr even for numpy scalars
    return str(v)


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_trials_csv(path, report: TrialReport) -> None:
    header = ["seed", "model", "nodes", "rmse_train", "rmse_val",
              "rmse_test", "r2_test", "ms"]
    rows = [[r.seed, r.model, r.nodes, r.rmse_train, r.rmse_val,
             r.rmse_test, r.r2_test, r.ms] for r in report.rows]
    write_atomic(path, csv_text(header, rows))


def write_trials_json(path, report: TrialReport) -> None:
    doc = {
        "rows": [{"seed": r.seed, "model": r.model, "nodes": r.nodes,
                  "rmse_train": r.rmse_train, "rmse_val": r.rmse_val,
                  "rmse_test": r.rmse_test, "r2_test": r.r2_test, "ms": r.ms}
                 for r in report.rows],
        "aggregates": report.aggregates,
        "failures": report.failures,
        "failed_count": len(report.failures),
    }
    write_atomic(path, json.dumps(doc, indent=2) + "\n")


def write_spectrum_csv(path, per_seed: list[dict[str, SpectrumReport]]) -> None:
    """Rank-wise mean eigenvalue per kind across seeds."""
    kinds = ["original", "unsupervised", "supervised"]
    rows = []
    for kind in kinds:
        stack = np.stack([rep[kind].eigvals for rep in per_seed])
        means = stack.mean(axis=0)
        rows.extend([[kind, i + 1, float(v)] for i, v in enumerate(means)])
    write_atomic(path, csv_text(["kind", "rank", "eigval"], rows))


def write_spectrum_json(path, per_seed: list[dict[str, SpectrumReport]]) -> None:
    doc = {
        "per_seed": [
            {kind: {"energy_topk": {str(k): v for k, v in rep.energy_topk.items()},
                    "effective_rank": rep.effective_rank}
             for kind, rep in reports.items()}
            for reports in per_seed
        ],
        "mean_energy_topk": {
            kind: {str(k): float(np.mean([rep[kind].energy_topk[k] for rep in per_seed]))
                   for k in TOPK_LEVELS}
            for kind in ("original", "unsupervised", "supervised")
        },
    }
    write_atomic(path, json.dumps(doc, indent=2) + "\n")


def write_sweep_csv(path, rows: list[dict]) -> None:
    write_atomic(path, csv_text(
        ["multiplier", "mean_rmse", "std_rmse"],
        [[r["multiplier"], r["mean_rmse"], r["std_rmse"]] for r in rows]))


def write_sweep_json(path, rows: list[dict], meta: dict | None = None) -> None:
    write_atomic(path, json.dumps({"rows": rows, **(meta or {})}, indent=2) + "\n")


def write_patience_csv(path, rows: list[dict]) -> None:
    write_atomic(path, csv_text(
        ["p_max", "model", "rmse_mean", "rmse_std", "nodes_mean", "nodes_std"],
        [[r["p_max"], r["model"], r["rmse_mean"], r["rmse_std"],
          r["nodes_mean"], r["nodes_std"]] for r in rows]))


def write_trace_csv(path, trace, timing: bool = False) -> None:
    header = ["l", "xi_min", "xi_sum", "train_residual", "val_error",
              "patience", "ms"]
    rows = []
    for rec in trace.records:
        xi_min = None if rec.scores is None else float(np.min(rec.scores))
        xi_sum = None if rec.scores is None else float(np.sum(rec.scores))
        rows.append([rec.l_index, xi_min, xi_sum, rec.train_residual_norm,
                     rec.val_error_norm, rec.patience,
                     rec.ms if timing else 0.0])
    write_atomic(path, csv_text(header, rows))
