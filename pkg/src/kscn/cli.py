"""Command-line front end: train | bench | spectrum | sweep | predict.

Every command resolves its configuration (flags > file > defaults), snapshots
the fully-resolved form next to its outputs, and draws all randomness from the
single base seed. Exit codes: 1 configuration, 2 data, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import evaluation as ev
from .basis import train_scn
from .baselines import BadCenterCount, train_krvfl, train_rbfn, train_rvfl
from .config import (ConfigError, RunConfig, build_experiment, config_to_dict,
                     load_config)
from .data import BadCounts, ParseError, TooFewRows
from .kernel import KernelConfig, WidthMismatch
from .linalg import NoConvergence, NotPositiveDefinite
from .model import (DimensionMismatch, EmptyValidation, IoError, SchemaError,
                    load_model, predict, save_model, train_kscn)

log = logging.getLogger("kscn.cli")

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage problems are config errors
        self.print_usage(sys.stderr)
        raise ConfigError(f"config: {message}")


def _setup_logging() -> None:
    level = os.environ.get("KSCN_LOG", "warn").lower()
    if level not in _LOG_LEVELS:
        raise ConfigError(
            f"config: KSCN_LOG must be one of {sorted(_LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=_LOG_LEVELS[level],
                        format="%(levelname)s %(name)s: %(message)s")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--seed", type=int, metavar="N", help="base seed")
    p.add_argument("--trials", type=int, metavar="N", help="number of independent trials")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--threads", type=int, metavar="N", help="worker cap (default: machine parallelism)")
    p.add_argument("--models", metavar="LIST", help="comma-separated model kinds")
    p.add_argument("--model", metavar="KIND", help="single model kind")
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall-clock times in reports (non-reproducible bytes)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kscn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("train", "train one model and write model.json + trace.csv"),
            ("bench", "independent trials over one or more models"),
            ("spectrum", "eigenvalue comparison of input-only/unsupervised/supervised Grams"),
            ("sweep", "kernel-width robustness sweep for a kernel model"),
            ("predict", "apply a saved model to a predictors CSV")):
        p = sub.add_parser(name, help=help_text)
        if name == "predict":
            p.add_argument("model_path", metavar="MODEL_JSON")
            p.add_argument("input_csv", metavar="IN_CSV")
            p.add_argument("output_csv", metavar="OUT_CSV")
        else:
            _add_common(p)
    return parser


def _resolve(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("config: --trials must be >= 1")
        cfg.trials = args.trials
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("config: --threads must be >= 1")
        cfg.threads = args.threads
    if getattr(args, "timing", None):
        cfg.timing = True
    if getattr(args, "model", None) is not None:
        from .config import MODEL_KINDS
        if args.model not in MODEL_KINDS:
            raise ConfigError(f"config: --model must be one of {MODEL_KINDS}, got {args.model!r}")
        cfg.model = args.model
    if getattr(args, "models", None) is not None:
        from .config import MODEL_KINDS
        kinds = [k.strip() for k in args.models.split(",") if k.strip()]
        if not kinds:
            raise ConfigError("config: --models must name at least one model")
        for k in kinds:
            if k not in MODEL_KINDS:
                raise ConfigError(f"config: --models entries must be one of {MODEL_KINDS}, got {k!r}")
        cfg.models = kinds
    return cfg


def resolve_specs(cfg: RunConfig, exp: ev.Experiment, kinds) -> dict[str, ev.ModelSpec]:
    """Fill in each requested model's hyperparameters, searching where needed."""
    sup = replace(cfg.supervisory, seed=cfg.seed)
    specs: dict[str, ev.ModelSpec] = {}
    rvfl_params: tuple[int, float] | None = None

    def rvfl_search():
        nonlocal rvfl_params
        if rvfl_params is None:
            L, gamma, _ = ev.select_rvfl_params(exp, sup.l_max, sup.gamma_pool, cfg.seed)
            rvfl_params = (L, gamma)
        return rvfl_params

    for kind in kinds:
        if kind == "kscn":
            if cfg.kernel.c is not None and cfg.kernel.tau is not None:
                kc = KernelConfig(c=cfg.kernel.c, tau=cfg.kernel.tau)
            else:
                kc, _ = ev.select_kscn_params(exp, sup, cfg.kernel.c_grid,
                                              cfg.kernel.tau_grid, cfg.seed,
                                              n_seeds=cfg.kernel.search_seeds,
                                              threads=cfg.threads)
            specs[kind] = ev.ModelSpec(kind=kind, sup=sup, kernel=kc)
        elif kind == "scn":
            specs[kind] = ev.ModelSpec(kind=kind, sup=sup)
        elif kind == "rvfl":
            L, gamma = rvfl_search()
            specs[kind] = ev.ModelSpec(kind=kind, L=L, gamma=gamma)
        elif kind == "krvfl":
            _, gamma = rvfl_search()
            if cfg.kernel.c is not None and cfg.kernel.tau is not None:
                c_grid, tau_grid = [cfg.kernel.c], [cfg.kernel.tau]
            else:
                c_grid, tau_grid = cfg.kernel.c_grid, cfg.kernel.tau_grid
            kc, L, _ = ev.select_krvfl_params(exp, gamma, sup.l_max, c_grid,
                                              tau_grid, cfg.seed, threads=cfg.threads)
            specs[kind] = ev.ModelSpec(kind=kind, kernel=kc, L=L, gamma=gamma)
        elif kind == "rbfn":
            k, c, _ = ev.select_rbfn_params(exp, sup.l_max, cfg.kernel.c_grid,
                                            cfg.seed, threads=cfg.threads)
            specs[kind] = ev.ModelSpec(kind=kind, k=k, c=c)
        else:
            raise ConfigError(f"config: unknown model kind {kind!r}")
    return specs


def _spec_snapshot(spec: ev.ModelSpec) -> dict:
    out: dict = {"kind": spec.kind}
    if spec.kernel is not None:
        out["kernel"] = {"c": spec.kernel.c, "tau": spec.kernel.tau}
    if spec.L is not None:
        out["L"] = spec.L
    if spec.gamma is not None:
        out["gamma"] = spec.gamma
    if spec.k is not None:
        out["k"] = spec.k
    if spec.c is not None:
        out["c"] = spec.c
    return out


def _write_resolved(cfg: RunConfig, specs: dict[str, ev.ModelSpec], command: str) -> None:
    doc = config_to_dict(cfg)
    doc.pop("out", None)  # the snapshot sits inside the output directory
    doc["command"] = command
    doc["resolved_models"] = {kind: _spec_snapshot(sp) for kind, sp in specs.items()}
    ev.write_atomic(os.path.join(cfg.out, "resolved-config.json"),
                    json.dumps(doc, indent=2) + "\n")


def cmd_train(args) -> int:
    cfg = _resolve(args)
    exp = build_experiment(cfg)
    specs = resolve_specs(cfg, exp, [cfg.model])
    spec = specs[cfg.model]
    rng = np.random.default_rng(cfg.seed)
    trace = None
    if spec.kind == "kscn":
        model, trace = train_kscn(exp.data, exp.split, spec.sup, spec.kernel, rng=rng)
    elif spec.kind == "scn":
        model, trace = train_scn(exp.data, exp.split, spec.sup, rng=rng)
    elif spec.kind == "krvfl":
        model, trace = train_krvfl(exp.data, exp.split, spec.L, spec.gamma,
                                   spec.kernel, rng)
    elif spec.kind == "rvfl":
        model = train_rvfl(exp.data, exp.split, spec.L, spec.gamma, rng)
    else:
        model = train_rbfn(exp.data, exp.split, spec.k, spec.c, rng)
    os.makedirs(cfg.out, exist_ok=True)
    save_model(model, os.path.join(cfg.out, "model.json"))
    if trace is not None:
        ev.write_trace_csv(os.path.join(cfg.out, "trace.csv"), trace, timing=cfg.timing)
    else:
        # non-incremental model: single summary row
        parts = exp.partitions()
        mets = {k: ev.compute_metrics(Y, predict(model, X)) for k, (X, Y) in parts.items()}
        ev.write_atomic(os.path.join(cfg.out, "trace.csv"), ev.csv_text(
            ["l", "xi_min", "xi_sum", "train_residual", "val_error", "patience", "ms"],
            [[ev.node_count(model), None, None, mets["train"].rmse, mets["val"].rmse, 0, 0.0]]))
    _write_resolved(cfg, specs, "train")
    print(f"wrote {os.path.join(cfg.out, 'model.json')}")
    return 0


def cmd_bench(args) -> int:
    cfg = _resolve(args)
    exp = build_experiment(cfg)
    specs = resolve_specs(cfg, exp, cfg.models)
    report = ev.run_trials(exp, [specs[k] for k in cfg.models], cfg.trials,
                           cfg.seed, threads=cfg.threads, timing=cfg.timing)
    os.makedirs(cfg.out, exist_ok=True)
    ev.write_trials_csv(os.path.join(cfg.out, "trials.csv"), report)
    ev.write_trials_json(os.path.join(cfg.out, "trials.json"), report)
    _write_resolved(cfg, specs, "bench")
    for kind, agg in report.aggregates.items():
        r = agg["rmse_test"]
        print(f"{kind}: rmse {r['mean']:.6f} +/- {r['std']:.6f} "
              f"(min {r['min']:.6f}, max {r['max']:.6f}, nodes {agg['nodes']['mean']:.1f})")
    return 0


def cmd_spectrum(args) -> int:
    cfg = _resolve(args)
    exp = build_experiment(cfg)
    specs = resolve_specs(cfg, exp, ["kscn"])
    kc = specs["kscn"].kernel
    seeds = [cfg.seed + i for i in range(cfg.spectrum_seeds)]
    reports = ev.spectrum_comparison(exp.data, exp.split, specs["kscn"].sup, kc, seeds)
    os.makedirs(cfg.out, exist_ok=True)
    ev.write_spectrum_csv(os.path.join(cfg.out, "spectrum.csv"), reports)
    ev.write_spectrum_json(os.path.join(cfg.out, "spectrum.json"), reports)
    _write_resolved(cfg, specs, "spectrum")
    for kind in ("original", "unsupervised", "supervised"):
        top5 = float(np.mean([rep[kind].energy_topk[5] for rep in reports]))
        print(f"{kind}: mean top-5 energy {top5:.4f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    if cfg.model not in ev.KERNEL_MODELS:
        raise ConfigError(
            f"config: sweep requires a kernel model ({ev.KERNEL_MODELS}), got {cfg.model!r}")
    exp = build_experiment(cfg)
    specs = resolve_specs(cfg, exp, [cfg.model])
    rows = ev.kernel_sweep(exp, specs[cfg.model], cfg.multipliers, cfg.trials,
                           cfg.seed, threads=cfg.threads)
    os.makedirs(cfg.out, exist_ok=True)
    ev.write_sweep_csv(os.path.join(cfg.out, "sweep.csv"), rows)
    ev.write_sweep_json(os.path.join(cfg.out, "sweep.json"), rows,
                        meta={"model": cfg.model,
                              "resolved": _spec_snapshot(specs[cfg.model])})
    _write_resolved(cfg, specs, "sweep")
    for r in rows:
        print(f"x{r['multiplier']:g}: rmse {r['mean_rmse']:.6f} +/- {r['std_rmse']:.6f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model_path)
    with open(args.input_csv, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{args.input_csv}: empty file") from None
        rows = []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise ParseError(f"{args.input_csv}: row {i} has {len(rec)} cells, "
                                 f"expected {len(header)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise ParseError(f"{args.input_csv}: non-numeric cell in row {i}") from None
    if not rows:
        raise ParseError(f"{args.input_csv}: empty data (header only)")
    X = np.asarray(rows, dtype=np.float64)
    preds = predict(model, X)
    lines = [",".join(f"y{j + 1}" for j in range(preds.shape[1]))]
    lines += [",".join(repr(float(v)) for v in row) for row in preds]
    ev.write_atomic(args.output_csv, "\n".join(lines) + "\n")
    print(f"wrote {args.output_csv} ({preds.shape[0]} rows)")
    return 0


_COMMANDS = {"train": cmd_train, "bench": cmd_bench, "spectrum": cmd_spectrum,
             "sweep": cmd_sweep, "predict": cmd_predict}

_DATA_ERRORS = (ParseError, TooFewRows, BadCounts, IoError, SchemaError,
                DimensionMismatch, WidthMismatch, BadCenterCount,
                EmptyValidation, FileNotFoundError)
_NUMERIC_ERRORS = (NotPositiveDefinite, NoConvergence, np.linalg.LinAlgError)


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
