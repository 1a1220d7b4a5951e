"""Render ssmlab CSV outputs into figures.

Four figure kinds, one per upstream CSV schema:

- ``convergence``: per-(flavor, method, scale) median relative error vs
  step size on log-log axes, with a gray slope-1 reference line anchored
  at the smallest-step S4 point and a fitted-slope annotation per curve.
- ``heatmap``: median relative error over the (step size, scale) grid,
  one panel per (flavor, method), color-coded on a log10 scale.
- ``mu_eta``: continuity score vs embedding-interpolation weight, one
  curve per lag plus the aggregate score.
- ``stagewise``: train/validation MSE vs cumulative wall time across the
  stride schedule.

Rendering is read-only and the numeric annotations are deterministic
functions of the input rows; image bytes may vary with the backend.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

__all__ = ["FIGURE_KINDS", "FigureSpec", "SchemaError", "render"]

FIGURE_KINDS = ("convergence", "heatmap", "mu_eta", "stagewise")

CONVERGENCE_COLUMNS = [
    "pair_id",
    "flavor",
    "method",
    "tau",
    "scale",
    "rel_max_error",
    "abs_max_error",
    "bound",
    "order_fit_group",
]
STAGEWISE_COLUMNS = ["stage", "stride", "delta", "epochs", "cum_wall_time_s", "train_mse", "val_mse"]
MU_LAG_COLUMNS = ["eta", "lag", "mu"]
MU_TOTAL_COLUMNS = ["eta", "mu_total"]


class SchemaError(ValueError):
    """Input CSV does not match the documented schema for the figure kind."""


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    """What to render: which CSV, as which figure kind, to which file."""

    input_csv: str
    kind: str
    output_path: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")


def _check_header(header: list[str], expected: list[str], where: str) -> None:
    if header != expected:
        missing = [c for c in expected if c not in header]
        unexpected = [c for c in header if c not in expected]
        parts = []
        if missing:
            parts.append(f"missing columns: {', '.join(missing)}")
        if unexpected:
            parts.append(f"unexpected columns: {', '.join(unexpected)}")
        if not parts:
            parts.append(f"column order must be: {', '.join(expected)}")
        raise SchemaError(f"{where}: {'; '.join(parts)}")


def _read_table(path: str, expected: list[str]) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        _check_header(header, expected, str(path))
        rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _read_metric_sections(path: str) -> tuple[list[dict], list[dict]]:
    """The metric CSV holds a per-lag section followed by an aggregate section."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        raw = [row for row in csv.reader(fh) if row]
    if not raw:
        raise SchemaError(f"{path}: file is empty")
    _check_header(raw[0], MU_LAG_COLUMNS, str(path))
    try:
        split = raw.index(MU_TOTAL_COLUMNS)
    except ValueError:
        raise SchemaError(f"{path}: missing aggregate section header {','.join(MU_TOTAL_COLUMNS)}") from None
    lag_rows = [dict(zip(MU_LAG_COLUMNS, row)) for row in raw[1:split]]
    total_rows = [dict(zip(MU_TOTAL_COLUMNS, row)) for row in raw[split + 1 :]]
    if not lag_rows or not total_rows:
        raise SchemaError(f"{path}: no data rows")
    return lag_rows, total_rows


def _median_curves(rows: list[dict]) -> dict:
    """(flavor, method, scale) -> sorted [(tau, median rel error over pairs)]."""
    cells: dict = {}
    for row in rows:
        key = (row["flavor"], row["method"], float(row["scale"]), float(row["tau"]))
        cells.setdefault(key, []).append(float(row["rel_max_error"]))
    curves: dict = {}
    for (flavor, method, scale, tau), vals in sorted(cells.items()):
        curves.setdefault((flavor, method, scale), []).append((tau, float(np.median(vals))))
    return curves


def _fit_slope(points: list[tuple]) -> float | None:
    taus = np.asarray([t for t, _ in points])
    errs = np.asarray([e for _, e in points])
    if len(np.unique(taus)) < 3 or np.any(errs <= 0):
        return None
    return float(np.polyfit(np.log(taus), np.log(errs), 1)[0])


def _render_convergence(spec: FigureSpec) -> dict:
    curves = _median_curves(_read_table(spec.input_csv, CONVERGENCE_COLUMNS))
    fig, ax = plt.subplots(figsize=(7, 5))
    annotations = []
    slopes: dict = {}
    for (flavor, method, scale), points in curves.items():
        taus = [t for t, _ in points]
        errs = [e for _, e in points]
        slope = _fit_slope(points)
        label = f"{flavor} {method} scale {scale:g}"
        if slope is not None:
            slopes[(flavor, method, scale)] = slope
            label += f" (slope {slope:.2f})"
            annotations.append(f"{flavor} {method} scale {scale:g}: slope {slope:.2f}")
        ax.loglog(taus, errs, marker="o", markersize=3, label=label)

    # gray first-order reference through the smallest-step point, S4 preferred
    anchor_keys = [k for k in curves if k[0] == "S4"] or list(curves)
    anchor_tau, anchor_err = min(curves[anchor_keys[0]], key=lambda p: p[0])
    all_taus = np.asarray(sorted({t for pts in curves.values() for t, _ in pts}))
    ax.loglog(all_taus, anchor_err * all_taus / anchor_tau, color="gray", linestyle="--", label="slope 1 reference")

    ax.set_xlabel(spec.xlabel or "step size")
    ax.set_ylabel(spec.ylabel or "median relative error")
    ax.set_title(spec.title or "discretization error under grid refinement")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return {"kind": spec.kind, "curves": len(curves), "slopes": slopes, "annotations": annotations}


def _render_heatmap(spec: FigureSpec) -> dict:
    curves = _median_curves(_read_table(spec.input_csv, CONVERGENCE_COLUMNS))
    panels: dict = {}
    for (flavor, method, scale), points in curves.items():
        for tau, err in points:
            panels.setdefault((flavor, method), {})[(tau, scale)] = err

    n = len(panels)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6 * ncols, 4 * nrows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_axis_off()
    for ax, ((flavor, method), cells) in zip(axes.flat, sorted(panels.items())):
        taus = sorted({t for t, _ in cells})
        scales = sorted({s for _, s in cells})
        grid = np.full((len(taus), len(scales)), np.nan)
        for (tau, scale), err in cells.items():
            grid[taus.index(tau), scales.index(scale)] = np.log10(err)
        im = ax.imshow(grid, aspect="auto", origin="lower", cmap="viridis")
        ax.set_xticks(range(len(scales)), [f"{s:g}" for s in scales])
        ax.set_yticks(range(len(taus)), [f"{t:g}" for t in taus], fontsize=7)
        ax.set_xlabel(spec.xlabel or "input scale")
        ax.set_ylabel(spec.ylabel or "step size")
        ax.set_title(f"{flavor} {method}")
        fig.colorbar(im, ax=ax, label="log10 median relative error")
    fig.suptitle(spec.title or "error by step size and input scale")
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return {"kind": spec.kind, "panels": len(panels), "annotations": []}


def _render_mu_eta(spec: FigureSpec) -> dict:
    lag_rows, total_rows = _read_metric_sections(spec.input_csv)
    by_lag: dict = {}
    for row in lag_rows:
        by_lag.setdefault(int(row["lag"]), []).append((float(row["eta"]), float(row["mu"])))

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for lag, points in sorted(by_lag.items()):
        points.sort()
        ax.plot([e for e, _ in points], [m for _, m in points], marker="o", markersize=3, label=f"lag {lag}")
    totals = sorted((float(r["eta"]), float(r["mu_total"])) for r in total_rows)
    ax.plot([e for e, _ in totals], [m for _, m in totals], color="black", linestyle="--", label="aggregate")

    ax.set_xlabel(spec.xlabel or "continuous-embedding weight")
    ax.set_ylabel(spec.ylabel or "continuity score")
    ax.set_title(spec.title or "continuity score vs embedding smoothness")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return {"kind": spec.kind, "lags": sorted(by_lag), "annotations": []}


def _render_stagewise(spec: FigureSpec) -> dict:
    rows = _read_table(spec.input_csv, STAGEWISE_COLUMNS)
    rows.sort(key=lambda r: int(r["stage"]))
    times = [float(r["cum_wall_time_s"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(times, [float(r["train_mse"]) for r in rows], marker="o", label="train MSE")
    ax.plot(times, [float(r["val_mse"]) for r in rows], marker="s", label="validation MSE")
    for r, t in zip(rows, times):
        ax.annotate(f"stride {r['stride']}", (t, float(r["val_mse"])), fontsize=7, textcoords="offset points", xytext=(4, 4))

    ax.set_xlabel(spec.xlabel or "cumulative wall time (s)")
    ax.set_ylabel(spec.ylabel or "MSE")
    ax.set_title(spec.title or "staged training progress")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return {"kind": spec.kind, "stages": len(rows), "annotations": []}


_RENDERERS = {
    "convergence": _render_convergence,
    "heatmap": _render_heatmap,
    "mu_eta": _render_mu_eta,
    "stagewise": _render_stagewise,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns metadata including any slope annotations."""
    if not Path(spec.input_csv).is_file():
        raise FileNotFoundError(f"input CSV not found: {spec.input_csv}")
    return _RENDERERS[spec.kind](spec)
