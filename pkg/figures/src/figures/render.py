"""Turn the benchmark CSV reports into figures.

Four kinds, one per report schema:

  spectrum   spectrum.csv  (kind,rank,eigval)          eigenvalue decay, log y
  sweep      sweep.csv     (multiplier,mean_rmse,std_rmse)  robustness curve
  stability  trials.csv    (seed,model,...,rmse_test,...)   per-trial scatter
  validation trace.csv     (l,...,train_residual,val_error,...)  loss curves

Rendering never reorders or transforms the data: the plotted series are the
CSV columns verbatim, which the tests verify through the artist accessors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

REQUIRED_COLUMNS = {
    "spectrum": ("kind", "rank", "eigval"),
    "sweep": ("multiplier", "mean_rmse", "std_rmse"),
    "stability": ("seed", "model", "rmse_test"),
    "validation": ("l", "train_residual", "val_error"),
}

SPECTRUM_SERIES = ("original", "unsupervised", "supervised")


class SchemaMismatch(ValueError):
    """Input CSV does not carry the columns the figure kind requires."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSV, figure kind, output path, axis options."""

    input_csv: str
    kind: str
    output_path: str
    log_y: bool = False
    title: str | None = None

    def __post_init__(self):
        if self.kind not in REQUIRED_COLUMNS:
            raise SchemaMismatch(
                f"unknown figure kind {self.kind!r}; expected one of "
                f"{sorted(REQUIRED_COLUMNS)}")


def read_table(path: str, kind: str) -> list[dict[str, str]]:
    """Load the CSV and check the kind's required columns before rendering."""
    required = REQUIRED_COLUMNS[kind]
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise SchemaMismatch(f"cannot read {path}: {exc}") from exc
    missing = [col for col in required if col not in header]
    if missing:
        raise SchemaMismatch(
            f"{path}: missing columns for kind '{kind}': {', '.join(missing)}")
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    return rows


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: FigureSpec):
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    return fig


def _render_spectrum(rows, spec: FigureSpec):
    fig, ax = _new_axes(spec)
    for name in SPECTRUM_SERIES:
        series = [(int(r["rank"]), float(r["eigval"])) for r in rows
                  if r["kind"] == name]
        if series:
            ax.plot([p[0] for p in series], [p[1] for p in series], label=name)
    extra = sorted({r["kind"] for r in rows} - set(SPECTRUM_SERIES))
    for name in extra:
        series = [(int(r["rank"]), float(r["eigval"])) for r in rows
                  if r["kind"] == name]
        ax.plot([p[0] for p in series], [p[1] for p in series], label=name)
    ax.set_yscale("log")  # decay plots are unreadable on a linear axis
    ax.set_xlabel("rank")
    ax.set_ylabel("eigenvalue")
    ax.legend()
    return _finish(fig, ax, spec)


def _render_sweep(rows, spec: FigureSpec):
    fig, ax = _new_axes(spec)
    x = [float(r["multiplier"]) for r in rows]
    mean = [float(r["mean_rmse"]) for r in rows]
    std = [float(r["std_rmse"]) for r in rows]
    ax.plot(x, mean, marker="o", label="mean RMSE")
    ax.fill_between(x, [m - s for m, s in zip(mean, std)],
                    [m + s for m, s in zip(mean, std)], alpha=0.2)
    ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("width multiplier")
    ax.set_ylabel("test RMSE")
    ax.legend()
    return _finish(fig, ax, spec)


def _render_stability(rows, spec: FigureSpec):
    fig, ax = _new_axes(spec)
    models = sorted({r["model"] for r in rows})
    for model in models:
        ys = [float(r["rmse_test"]) for r in rows if r["model"] == model]
        ax.scatter(range(1, len(ys) + 1), ys, s=14, label=model)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("trial")
    ax.set_ylabel("test RMSE")
    ax.legend()
    return _finish(fig, ax, spec)


def _render_validation(rows, spec: FigureSpec):
    fig, ax = _new_axes(spec)
    steps = [int(r["l"]) for r in rows]
    ax.plot(steps, [float(r["val_error"]) for r in rows],
            marker="o", label="validation error")
    ax.plot(steps, [float(r["train_residual"]) for r in rows],
            marker=".", label="training residual")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("nodes")
    ax.set_ylabel("error norm")
    ax.legend()
    return _finish(fig, ax, spec)


_RENDERERS = {
    "spectrum": _render_spectrum,
    "sweep": _render_sweep,
    "stability": _render_stability,
    "validation": _render_validation,
}


def render(spec: FigureSpec):
    """Render the figure and write the image; returns the matplotlib figure.

    The returned figure lets callers (and tests) inspect the plotted series;
    close it with matplotlib when done.
    """
    rows = read_table(spec.input_csv, spec.kind)
    return _RENDERERS[spec.kind](rows, spec)
