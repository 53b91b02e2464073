"""Dataset ingestion, synthetic generation, lagged augmentation, scaling, splits.

CSV convention: comma separated, one header row, UTF-8, '.' decimal point.
Input normalization is min-max fit on the training partition only; targets are
left in raw units.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


class ParseError(ValueError):
    """Malformed CSV (ragged row, missing data, bad header)."""


class NonNumericCell(ParseError):
    """A cell could not be parsed as a number; carries (row, col) location."""

    def __init__(self, row: int, col: int, text: str):
        super().__init__(f"non-numeric cell at row {row}, column {col}: {text!r}")
        self.row = row
        self.col = col


class TooFewRows(ValueError):
    """Not enough rows to build the requested lagged features."""


class BadCounts(ValueError):
    """Requested partition sizes exceed the number of rows."""


@dataclass
class Dataset:
    """Predictor matrix X (n x m), target matrix Y (n x M), per-feature names,
    and min-max stats of the training partition once normalized."""

    X: NDArray[np.float64]
    Y: NDArray[np.float64]
    feature_names: list[str] = field(default_factory=list)
    norm_stats: NDArray[np.float64] | None = None  # (m, 2) columns: min, max

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=np.float64))
        if self.Y.shape[0] != self.X.shape[0]:
            raise ValueError(
                f"X and Y row counts differ: {self.X.shape[0]} vs {self.Y.shape[0]}")
        if not self.feature_names:
            self.feature_names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length does not match X columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class Split:
    """Disjoint row-index partition."""

    train_idx: NDArray[np.intp]
    val_idx: NDArray[np.intp]
    test_idx: NDArray[np.intp]


def gen_numerical(n: int, seed: int) -> Dataset:
    """Synthetic one-dimensional benchmark: a broad bump plus two narrow spikes.

    x ~ Uniform[0, 1];
    f(x) = 0.2 exp(-(10x-4)^2) + 0.5 exp(-(80x-40)^2) + 0.3 exp(-(80x-20)^2)
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 1))
    y = numerical_target(x)
    return Dataset(X=x, Y=y, feature_names=["x"])


def numerical_target(x: NDArray[np.float64]) -> NDArray[np.float64]:
    return (0.2 * np.exp(-((10.0 * x - 4.0) ** 2))
            + 0.5 * np.exp(-((80.0 * x - 40.0) ** 2))
            + 0.3 * np.exp(-((80.0 * x - 20.0) ** 2)))


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise NonNumericCell(row, col, text) from None


def load_csv(path, target_cols: list[int] | tuple[int, ...]) -> Dataset:
    """Load a rectangular numeric CSV; ``target_cols`` become Y, the rest X.

    Column order is preserved on both sides of the partition.
    """
    target_set = set(int(c) for c in target_cols)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        width = len(header)
        if width == 0:
            raise ParseError(f"{path}: empty header row")
        bad = [c for c in target_set if not 0 <= c < width]
        if bad:
            raise ParseError(f"{path}: target column {bad[0]} outside 0..{width - 1}")
        rows: list[list[float]] = []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != width:
                raise ParseError(
                    f"{path}: row {i} has {len(rec)} cells, expected {width}")
            rows.append([_parse_cell(cell, i, j) for j, cell in enumerate(rec)])
    if not rows:
        raise ParseError(f"{path}: empty data (header only)")
    full = np.asarray(rows, dtype=np.float64)
    x_cols = [j for j in range(width) if j not in target_set]
    y_cols = [j for j in range(width) if j in target_set]
    if not y_cols:
        raise ParseError(f"{path}: no target columns designated")
    if not x_cols:
        raise ParseError(f"{path}: all columns designated as targets")
    return Dataset(X=full[:, x_cols], Y=full[:, y_cols],
                   feature_names=[header[j] for j in x_cols])


def save_csv(d: Dataset, path, target_names: list[str] | None = None) -> None:
    """Write predictors then targets; mirrors the load format bit-exactly."""
    names = target_names or [f"y{i + 1}" for i in range(d.n_outputs)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + list(names))
        for i in range(d.n):
            writer.writerow([repr(float(v)) for v in d.X[i]]
                            + [repr(float(v)) for v in d.Y[i]])


def augment_debutanizer(raw: Dataset) -> Dataset:
    """Soft-sensor feature construction for the 7-input distillation series.

    Output predictors, in order:
      u1(k), u2(k), u3(k), u4(k), u5(k),
      u5(k-1), u5(k-2), u5(k-3), (u6(k)+u7(k))/2,
      y(k-4), y(k-5), y(k-6)
    The first six rows are dropped (maximum lag is six).
    """
    if raw.m != 7 or raw.n_outputs != 1:
        raise ValueError(f"expected 7 predictors and 1 target, got {raw.m}/{raw.n_outputs}")
    if raw.n < 7:
        raise TooFewRows(f"need at least 7 rows, got {raw.n}")
    u, y = raw.X, raw.Y[:, 0]
    k = np.arange(6, raw.n)
    cols = [
        u[k, 0], u[k, 1], u[k, 2], u[k, 3], u[k, 4],
        u[k - 1, 4], u[k - 2, 4], u[k - 3, 4],
        0.5 * (u[k, 5] + u[k, 6]),
        y[k - 4], y[k - 5], y[k - 6],
    ]
    names = [
        "u1", "u2", "u3", "u4", "u5",
        "u5_lag1", "u5_lag2", "u5_lag3", "u67_mean",
        "y_lag4", "y_lag5", "y_lag6",
    ]
    return Dataset(X=np.column_stack(cols), Y=y[k][:, None], feature_names=names)


def augment_powerload(raw: Dataset) -> Dataset:
    """Hourly-load feature construction: four exogenous inputs plus y(k-1)."""
    if raw.m != 4 or raw.n_outputs != 1:
        raise ValueError(f"expected 4 predictors and 1 target, got {raw.m}/{raw.n_outputs}")
    if raw.n < 2:
        raise TooFewRows(f"need at least 2 rows, got {raw.n}")
    u, y = raw.X, raw.Y[:, 0]
    k = np.arange(1, raw.n)
    cols = [u[k, 0], u[k, 1], u[k, 2], u[k, 3], y[k - 1]]
    names = ["u1", "u2", "u3", "u4", "y_lag1"]
    return Dataset(X=np.column_stack(cols), Y=y[k][:, None], feature_names=names)


def fit_norm_stats(X: NDArray[np.float64], train_idx) -> NDArray[np.float64]:
    sub = X[np.asarray(train_idx, dtype=np.intp)]
    return np.column_stack([sub.min(axis=0), sub.max(axis=0)])


def apply_norm_stats(X: NDArray[np.float64], stats: NDArray[np.float64]) -> NDArray[np.float64]:
    lo, hi = stats[:, 0], stats[:, 1]
    span = hi - lo
    out = np.empty_like(X, dtype=np.float64)
    const = span <= 0.0
    if np.any(~const):
        out[:, ~const] = (X[:, ~const] - lo[~const]) / span[~const]
    out[:, const] = 0.5
    return out


def normalize_fit_apply(d: Dataset, s: Split) -> Dataset:
    """Min-max scale every predictor using training-partition stats.

    Training columns land in [0, 1]; validation/test values may fall outside.
    Constant training columns map to 0.5 everywhere. Targets are untouched.
    """
    if len(s.train_idx) == 0:
        raise ValueError("training partition is empty")
    stats = fit_norm_stats(d.X, s.train_idx)
    return Dataset(X=apply_norm_stats(d.X, stats), Y=d.Y.copy(),
                   feature_names=list(d.feature_names), norm_stats=stats)


def split_sequential(n: int, n_train: int, n_val: int) -> Split:
    """First n_train rows train, next n_val validate, remainder test."""
    if n_train < 0 or n_val < 0 or n_train + n_val > n:
        raise BadCounts(f"n_train={n_train} + n_val={n_val} exceeds n={n}")
    idx = np.arange(n, dtype=np.intp)
    return Split(train_idx=idx[:n_train],
                 val_idx=idx[n_train:n_train + n_val],
                 test_idx=idx[n_train + n_val:])


def split_shuffled(n: int, n_train: int, n_val: int, seed: int) -> Split:
    """Seeded permutation followed by a sequential split (for i.i.d. data)."""
    if n_train < 0 or n_val < 0 or n_train + n_val > n:
        raise BadCounts(f"n_train={n_train} + n_val={n_val} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n).astype(np.intp)
    return Split(train_idx=perm[:n_train],
                 val_idx=perm[n_train:n_train + n_val],
                 test_idx=perm[n_train + n_val:])


def noisy_validation(d: Dataset, s: Split, seed: int, scale: float = 0.05) -> Dataset:
    """Validation rows synthesized from the test partition plus Gaussian noise.

    Noise is zero-mean with sigma = scale * per-column training std (applied to
    predictors and targets alike). Used when a time-ordered dataset reserves
    its tail for testing and no separate validation stretch exists.
    """
    rng = np.random.default_rng(seed)
    tr = np.asarray(s.train_idx, dtype=np.intp)
    te = np.asarray(s.test_idx, dtype=np.intp)
    x_sd = d.X[tr].std(axis=0)
    y_sd = d.Y[tr].std(axis=0)
    Xv = d.X[te] + rng.normal(0.0, 1.0, size=(len(te), d.m)) * (scale * x_sd)
    Yv = d.Y[te] + rng.normal(0.0, 1.0, size=(len(te), d.n_outputs)) * (scale * y_sd)
    return Dataset(X=Xv, Y=Yv, feature_names=list(d.feature_names),
                   norm_stats=None if d.norm_stats is None else d.norm_stats.copy())


def subset(d: Dataset, idx) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Convenience view of (X, Y) restricted to the given rows."""
    ix = np.asarray(idx, dtype=np.intp)
    return d.X[ix], d.Y[ix]
