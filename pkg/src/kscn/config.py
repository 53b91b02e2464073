"""Run configuration: JSON file + flag overrides, validated before any work.

Precedence is flags > file > defaults, where the defaults reproduce the
desk-scale benchmark settings (600-sample builtin dataset split 200/100/300,
candidate pool of 50, patience 5, width grid logspace(-2, 2, 41), ridge grid
{0.1, 0.01, 0.001, 0.0001}, 50 trials). Unknown keys are rejected with their
full path so typos fail fast.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .basis import SupervisoryConfig
from .data import (Dataset, Split, augment_debutanizer, augment_powerload,
                   gen_numerical, load_csv, noisy_validation,
                   normalize_fit_apply, split_sequential, split_shuffled)
from .evaluation import DEFAULT_TAU_GRID, Experiment, default_c_grid

AUGMENTATIONS = ("debutanizer", "powerload")
MODEL_KINDS = ("kscn", "scn", "rvfl", "krvfl", "rbfn")


class ConfigError(ValueError):
    """Invalid configuration; the message carries the offending key path."""


@dataclass
class DatasetConfig:
    source: str = "builtin:numerical"
    n: int = 600
    seed: int = 0
    path: str | None = None
    target_cols: list[int] = field(default_factory=lambda: [-1])
    augmentation: str | None = None


@dataclass
class SplitConfig:
    n_train: int = 200
    n_val: int = 100
    shuffle: bool | None = None          # default: True for builtin, False for csv
    noisy_validation: bool = False
    noise_scale: float = 0.05


@dataclass
class KernelSearchConfig:
    c: float | None = None
    tau: float | None = None
    c_grid: list[float] = field(default_factory=default_c_grid)
    tau_grid: list[float] = field(default_factory=lambda: list(DEFAULT_TAU_GRID))
    search_seeds: int = 3


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    supervisory: SupervisoryConfig = field(default_factory=SupervisoryConfig)
    kernel: KernelSearchConfig = field(default_factory=KernelSearchConfig)
    model: str = "kscn"
    models: list[str] = field(default_factory=lambda: ["kscn", "scn"])
    trials: int = 50
    seed: int = 0
    threads: int | None = None
    out: str = "out/run"
    multipliers: list[float] = field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0])
    spectrum_seeds: int = 10
    timing: bool = False


def _expect(value, kinds, path: str):
    kinds = kinds if isinstance(kinds, tuple) else (kinds,)
    bad = not isinstance(value, kinds)
    if isinstance(value, bool) and bool not in kinds:  # bool is an int subclass
        bad = True
    if bad:
        names = "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"config: '{path}' must be {names}, got {type(value).__name__}")
    return value


def _number(value, path: str, positive: bool = False) -> float:
    _expect(value, (int, float), path)
    v = float(value)
    if positive and v <= 0:
        raise ConfigError(f"config: '{path}' must be positive, got {v}")
    return v


def _int(value, path: str, minimum: int | None = None) -> int:
    _expect(value, (int,), path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"config: '{path}' must be >= {minimum}, got {value}")
    return int(value)


def _number_list(value, path: str, positive: bool = False) -> list[float]:
    _expect(value, (list,), path)
    return [_number(v, f"{path}[{i}]", positive) for i, v in enumerate(value)]


def _reject_unknown(doc: dict, known, path: str) -> None:
    for key in doc:
        if key not in known:
            raise ConfigError(f"config: unknown key '{path}{key}'")


def parse_config(doc: dict) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    cfg = RunConfig()
    _reject_unknown(doc, {f.name for f in fields(RunConfig)}, "")

    if "dataset" in doc:
        sub = _expect(doc["dataset"], (dict,), "dataset")
        _reject_unknown(sub, {f.name for f in fields(DatasetConfig)}, "dataset.")
        ds = cfg.dataset
        if "source" in sub:
            src = _expect(sub["source"], (str,), "dataset.source")
            if src not in ("builtin:numerical", "csv"):
                raise ConfigError(
                    f"config: 'dataset.source' must be 'builtin:numerical' or 'csv', got {src!r}")
            ds.source = src
        if "n" in sub:
            ds.n = _int(sub["n"], "dataset.n", minimum=1)
        if "seed" in sub:
            ds.seed = _int(sub["seed"], "dataset.seed")
        if "path" in sub and sub["path"] is not None:
            ds.path = _expect(sub["path"], (str,), "dataset.path")
        if "target_cols" in sub:
            cols = _expect(sub["target_cols"], (list,), "dataset.target_cols")
            ds.target_cols = [_int(c, f"dataset.target_cols[{i}]") for i, c in enumerate(cols)]
        if "augmentation" in sub and sub["augmentation"] is not None:
            aug = _expect(sub["augmentation"], (str,), "dataset.augmentation")
            if aug not in AUGMENTATIONS:
                raise ConfigError(
                    f"config: 'dataset.augmentation' must be one of {AUGMENTATIONS}, got {aug!r}")
            ds.augmentation = aug
        if ds.source == "csv" and ds.path is None:
            raise ConfigError("config: 'dataset.path' is required when source is 'csv'")

    if "split" in doc:
        sub = _expect(doc["split"], (dict,), "split")
        _reject_unknown(sub, {f.name for f in fields(SplitConfig)}, "split.")
        sp = cfg.split
        if "n_train" in sub:
            sp.n_train = _int(sub["n_train"], "split.n_train", minimum=1)
        if "n_val" in sub:
            sp.n_val = _int(sub["n_val"], "split.n_val", minimum=0)
        if "shuffle" in sub and sub["shuffle"] is not None:
            sp.shuffle = _expect(sub["shuffle"], (bool,), "split.shuffle")
        if "noisy_validation" in sub:
            sp.noisy_validation = _expect(sub["noisy_validation"], (bool,), "split.noisy_validation")
        if "noise_scale" in sub:
            sp.noise_scale = _number(sub["noise_scale"], "split.noise_scale", positive=True)

    if "supervisory" in doc:
        sub = _expect(doc["supervisory"], (dict,), "supervisory")
        known = {"gamma_pool", "r_sequence", "candidates_per_step", "l_max",
                 "patience", "seed"}
        _reject_unknown(sub, known, "supervisory.")
        kwargs = {}
        if "seed" in sub:
            kwargs["seed"] = _int(sub["seed"], "supervisory.seed")
        if "gamma_pool" in sub:
            kwargs["gamma_pool"] = tuple(_number_list(sub["gamma_pool"], "supervisory.gamma_pool", positive=True))
        if "r_sequence" in sub:
            seq = _number_list(sub["r_sequence"], "supervisory.r_sequence")
            if any(not 0 < r < 1 for r in seq):
                raise ConfigError("config: 'supervisory.r_sequence' entries must lie in (0, 1)")
            kwargs["r_sequence"] = tuple(seq)
        if "candidates_per_step" in sub:
            kwargs["candidates_per_step"] = _int(sub["candidates_per_step"],
                                                 "supervisory.candidates_per_step", minimum=1)
        if "l_max" in sub:
            kwargs["l_max"] = _int(sub["l_max"], "supervisory.l_max", minimum=1)
        if "patience" in sub:
            kwargs["patience"] = _int(sub["patience"], "supervisory.patience", minimum=1)
        try:
            cfg.supervisory = SupervisoryConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"config: supervisory: {exc}") from exc

    if "kernel" in doc:
        sub = _expect(doc["kernel"], (dict,), "kernel")
        _reject_unknown(sub, {f.name for f in fields(KernelSearchConfig)}, "kernel.")
        kn = cfg.kernel
        if "c" in sub and sub["c"] is not None:
            kn.c = _number(sub["c"], "kernel.c", positive=True)
        if "tau" in sub and sub["tau"] is not None:
            kn.tau = _number(sub["tau"], "kernel.tau", positive=True)
        if "c_grid" in sub and sub["c_grid"] is not None:
            kn.c_grid = _number_list(sub["c_grid"], "kernel.c_grid", positive=True)
        if "tau_grid" in sub and sub["tau_grid"] is not None:
            kn.tau_grid = _number_list(sub["tau_grid"], "kernel.tau_grid", positive=True)
        if "search_seeds" in sub:
            kn.search_seeds = _int(sub["search_seeds"], "kernel.search_seeds", minimum=1)

    if "model" in doc:
        kind = _expect(doc["model"], (str,), "model")
        if kind not in MODEL_KINDS:
            raise ConfigError(f"config: 'model' must be one of {MODEL_KINDS}, got {kind!r}")
        cfg.model = kind
    if "models" in doc:
        lst = _expect(doc["models"], (list,), "models")
        out = []
        for i, kind in enumerate(lst):
            _expect(kind, (str,), f"models[{i}]")
            if kind not in MODEL_KINDS:
                raise ConfigError(f"config: 'models[{i}]' must be one of {MODEL_KINDS}, got {kind!r}")
            out.append(kind)
        if not out:
            raise ConfigError("config: 'models' must not be empty")
        cfg.models = out
    if "trials" in doc:
        cfg.trials = _int(doc["trials"], "trials", minimum=1)
    if "seed" in doc:
        cfg.seed = _int(doc["seed"], "seed")
    elif cfg.supervisory.seed:
        cfg.seed = cfg.supervisory.seed  # section-level seed as fallback
    if "threads" in doc and doc["threads"] is not None:
        cfg.threads = _int(doc["threads"], "threads", minimum=1)
    if "out" in doc:
        cfg.out = _expect(doc["out"], (str,), "out")
    if "multipliers" in doc:
        cfg.multipliers = _number_list(doc["multipliers"], "multipliers", positive=True)
        if not cfg.multipliers:
            raise ConfigError("config: 'multipliers' must not be empty")
    if "spectrum_seeds" in doc:
        cfg.spectrum_seeds = _int(doc["spectrum_seeds"], "spectrum_seeds", minimum=1)
    if "timing" in doc:
        cfg.timing = _expect(doc["timing"], (bool,), "timing")
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully-resolved snapshot suitable for replaying a run."""
    return {
        "dataset": {
            "source": cfg.dataset.source,
            "n": cfg.dataset.n,
            "seed": cfg.dataset.seed,
            "path": cfg.dataset.path,
            "target_cols": list(cfg.dataset.target_cols),
            "augmentation": cfg.dataset.augmentation,
        },
        "split": {
            "n_train": cfg.split.n_train,
            "n_val": cfg.split.n_val,
            "shuffle": cfg.split.shuffle,
            "noisy_validation": cfg.split.noisy_validation,
            "noise_scale": cfg.split.noise_scale,
        },
        "supervisory": {
            "gamma_pool": list(cfg.supervisory.gamma_pool),
            "r_sequence": list(cfg.supervisory.r_sequence),
            "candidates_per_step": cfg.supervisory.candidates_per_step,
            "l_max": cfg.supervisory.l_max,
            "patience": cfg.supervisory.patience,
            "seed": cfg.supervisory.seed,
        },
        "kernel": {
            "c": cfg.kernel.c,
            "tau": cfg.kernel.tau,
            "c_grid": list(cfg.kernel.c_grid),
            "tau_grid": list(cfg.kernel.tau_grid),
            "search_seeds": cfg.kernel.search_seeds,
        },
        "model": cfg.model,
        "models": list(cfg.models),
        "trials": cfg.trials,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "out": cfg.out,
        "multipliers": list(cfg.multipliers),
        "spectrum_seeds": cfg.spectrum_seeds,
        "timing": cfg.timing,
    }


def build_experiment(cfg: RunConfig) -> Experiment:
    """Materialize the configured dataset, partition, and normalization."""
    ds = cfg.dataset
    if ds.source == "builtin:numerical":
        raw = gen_numerical(ds.n, ds.seed)
        shuffle = True if cfg.split.shuffle is None else cfg.split.shuffle
    else:
        cols = list(ds.target_cols)
        if any(c < 0 for c in cols):
            import csv as _csv
            with open(ds.path, newline="", encoding="utf-8") as fh:
                try:
                    width = len(next(_csv.reader(fh)))
                except StopIteration:
                    width = 0
            cols = [c if c >= 0 else width + c for c in cols]
        raw = load_csv(ds.path, cols)
        if ds.augmentation == "debutanizer":
            raw = augment_debutanizer(raw)
        elif ds.augmentation == "powerload":
            raw = augment_powerload(raw)
        shuffle = False if cfg.split.shuffle is None else cfg.split.shuffle

    n = raw.n
    sp = cfg.split
    if sp.noisy_validation:
        base = (split_shuffled(n, sp.n_train, 0, ds.seed) if shuffle
                else split_sequential(n, sp.n_train, 0))
        noisy = noisy_validation(raw, base, seed=ds.seed, scale=sp.noise_scale)
        combined = Dataset(
            X=np.vstack([raw.X, noisy.X]),
            Y=np.vstack([raw.Y, noisy.Y]),
            feature_names=list(raw.feature_names))
        split = Split(train_idx=base.train_idx,
                      val_idx=np.arange(n, n + noisy.n, dtype=np.intp),
                      test_idx=base.test_idx)
        raw = combined
    else:
        split = (split_shuffled(n, sp.n_train, sp.n_val, ds.seed) if shuffle
                 else split_sequential(n, sp.n_train, sp.n_val))
    data = normalize_fit_apply(raw, split)
    return Experiment(raw=raw, data=data, split=split)
