"""Line plots over sweep result CSVs.

Every figure is a fixed view of the result table: one column on the x axis,
one or more metric columns averaged into y values, and the remaining sweep
axes keying the series. Nothing is recomputed from simulation inputs; the
CSV is the single source of truth, so a figure can always be rebuilt from
an archived result file alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class PlotError(ValueError):
    """Raised for unusable inputs; message says what is missing."""


_SPLIT_LABELS = {
    "active_v2i_dedicated": "V2I dedicated",
    "active_v2i_unlicensed": "V2I unlicensed",
    "active_v2v_dedicated": "V2V dedicated",
    "active_v2v_unlicensed": "V2V unlicensed",
}

_AXIS_LABELS = {
    "replication": "replication index",
    "speed_kmh": "vehicle speed (km/h)",
    "gamma_db": "SINR threshold (dB)",
    "lam": "interference price λ (1/m²)",
    "active_count": "active links",
    "interference_ratio": "interference coverage (fraction of map)",
}


@dataclass(frozen=True)
class FigureDef:
    """Which columns a figure reads and how it groups them."""

    x: str
    metrics: tuple
    series_axes: tuple
    y_label: str
    title: str

    def required_columns(self) -> tuple:
        return (self.x,) + self.metrics + self.series_axes


FIGURES = {
    "fig4": FigureDef(
        x="replication", metrics=("active_count",),
        series_axes=("algorithm", "mode", "lam"),
        y_label=_AXIS_LABELS["active_count"],
        title="Active links per replication"),
    "fig5": FigureDef(
        x="speed_kmh", metrics=("active_count",),
        series_axes=("algorithm", "mode", "lam"),
        y_label=_AXIS_LABELS["active_count"],
        title="Active links vs. vehicle speed"),
    "fig6": FigureDef(
        x="lam", metrics=("interference_ratio",),
        series_axes=("algorithm", "mode"),
        y_label=_AXIS_LABELS["interference_ratio"],
        title="Interference coverage vs. interference price"),
    "fig7": FigureDef(
        x="gamma_db", metrics=("active_count",),
        series_axes=("algorithm", "mode", "lam"),
        y_label=_AXIS_LABELS["active_count"],
        title="Active links vs. SINR threshold"),
    "fig8": FigureDef(
        x="lam", metrics=tuple(_SPLIT_LABELS),
        series_axes=("algorithm", "mode"),
        y_label="mean allocated links",
        title="Band and role split vs. interference price"),
}


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    x_label: str
    y_label: str
    title: str
    series: tuple


def load_rows(path: str) -> list:
    """Result CSV as a list of column->string dicts; header must exist."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise PlotError(f"{path}: empty file")
        rows = list(reader)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def _check_schema(rows: list, fig: FigureDef, path: str) -> None:
    have = set(rows[0])
    missing = [c for c in fig.required_columns() if c not in have]
    if missing:
        raise PlotError(f"{path}: missing columns: {', '.join(missing)}")


def _series_label(key: tuple, axes: tuple, metric: str,
                  multi_metric: bool) -> str:
    parts = []
    for axis, val in zip(axes, key):
        parts.append(f"λ={val}" if axis == "lam" else str(val))
    if multi_metric:
        parts.append(_SPLIT_LABELS.get(metric, metric))
    return " ".join(parts)


def figure_spec(path: str, figure_id: str) -> FigureSpec:
    """Load, validate and aggregate the CSV into plottable series.

    y values are means over every row sharing the series key and x value,
    which pools replications and any sweep axes the figure does not key.
    Series are ordered by key (then metric) so output is deterministic.
    """
    if figure_id not in FIGURES:
        raise PlotError(f"unknown figure '{figure_id}'; "
                        f"choose from {', '.join(sorted(FIGURES))}")
    fig = FIGURES[figure_id]
    rows = load_rows(path)
    _check_schema(rows, fig, path)

    groups = {}
    for row in rows:
        key = tuple(row[a] for a in fig.series_axes)
        try:
            x = float(row[fig.x])
            vals = [float(row[m]) for m in fig.metrics]
        except ValueError as err:
            raise PlotError(f"{path}: non-numeric cell ({err})") from None
        bucket = groups.setdefault(key, {})
        bucket.setdefault(x, []).append(vals)

    multi = len(fig.metrics) > 1
    series = []
    for key in sorted(groups):
        xs = sorted(groups[key])
        cols = np.array([[np.mean([v[i] for v in groups[key][x]])
                          for x in xs] for i in range(len(fig.metrics))])
        for i, metric in enumerate(fig.metrics):
            series.append(Series(_series_label(key, fig.series_axes,
                                               metric, multi),
                                 tuple(xs), tuple(cols[i])))
    return FigureSpec(figure_id, _AXIS_LABELS[fig.x], fig.y_label,
                      fig.title, tuple(series))


def render(path: str, figure_id: str, out: str) -> FigureSpec:
    """Write one image for `figure_id`; overwrites `out` if present.

    Validation happens before any drawing, so a failed call leaves no
    file behind. Returns the aggregated spec for callers that want the
    plotted numbers.
    """
    spec = figure_spec(path, figure_id)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    try:
        for s in spec.series:
            ax.plot(s.x, s.y, marker="o", markersize=4, linewidth=1.3,
                    label=s.label)
        ax.set_xlabel(spec.x_label)
        ax.set_ylabel(spec.y_label)
        ax.set_title(spec.title)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7, ncols=2 if len(spec.series) > 6 else 1)
        fig.tight_layout()
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    return spec
