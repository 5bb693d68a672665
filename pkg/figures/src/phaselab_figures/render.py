"""Build the six reproduction figures from harness CSV files.

The CSVs are the only interface to the experiment code: rows keyed by
(ratio, signal_scale, dof, trial_index, metric_name).  Aggregation mirrors
the harness report (mean/std over trials, NaN rows excluded) so the plotted
means agree with `phaselab report` to full precision.
"""

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

# fixed style seed: deterministic ids inside SVG output
matplotlib.rcParams["svg.hashsalt"] = "phaselab-figures"

REQUIRED_COLUMNS = ("ratio", "signal_scale", "dof", "trial_index", "metric_name", "metric_value")

# What each figure plots.  x: CSV column feeding the x axis; sqrt_x: plot
# against sqrt(x) (low-energy sweeps are linear in the root of the scale);
# reciprocal_panel: add a side panel with 1/mean; per_dof: one curve per
# degrees-of-freedom value.
FIGURES = {
    "fig1": {"metric": "relative_mse", "x": "ratio", "sqrt_x": False, "reciprocal_panel": True, "per_dof": False},
    "fig2": {"metric": "mae", "x": "signal_scale", "sqrt_x": True, "reciprocal_panel": False, "per_dof": False},
    "fig3": {"metric": "relative_mse", "x": "ratio", "sqrt_x": False, "reciprocal_panel": True, "per_dof": False},
    "fig4": {"metric": "relative_mse", "x": "ratio", "sqrt_x": False, "reciprocal_panel": True, "per_dof": True},
    "fig5": {"metric": "relative_mse", "x": "ratio", "sqrt_x": False, "reciprocal_panel": True, "per_dof": True},
    "fig6": {"metric": "mae", "x": "signal_scale", "sqrt_x": False, "reciprocal_panel": False, "per_dof": True},
}

X_LABELS = {"ratio": "oversampling ratio m/n", "signal_scale": "signal scale"}

Y_LABELS = {"relative_mse": "mean relative MSE", "mae": "mean MAE"}


class FigureError(Exception):
    pass


def load_rows(path):
    """Read a harness CSV into a list of dicts; validates required columns."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FigureError(f"{path}: empty file")
        for col in REQUIRED_COLUMNS:
            if col not in reader.fieldnames:
                raise FigureError(f"{path}: missing required column {col!r}")
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return rows


def curves(rows, metric, x_column, per_dof):
    """Aggregate metric rows into curves: dof -> (xs, means, stds).

    NaN values are dropped from the aggregates, matching the report tool.
    The dof key is None for runs without one.
    """
    cells = {}
    for row in rows:
        if row["metric_name"] != metric:
            continue
        dof = float(row["dof"]) if (per_dof and row["dof"]) else None
        x = float(row[x_column])
        cells.setdefault((dof, x), []).append(float(row["metric_value"]))
    if not cells:
        raise FigureError(f"no rows with metric {metric!r}")
    out = {}
    for dof in sorted({d for d, _ in cells}, key=lambda d: -1.0 if d is None else d):
        xs = sorted(x for d, x in cells if d == dof)
        means, stds = [], []
        for x in xs:
            vals = np.array(cells[(dof, x)], dtype=np.float64)
            good = vals[np.isfinite(vals)]
            means.append(float(np.mean(good)) if len(good) else math.nan)
            stds.append(float(np.std(good)) if len(good) else math.nan)
        out[dof] = (xs, means, stds)
    return out


def render_figure(fig_id, csv_path, out_path):
    """Render one figure from its CSV; returns the aggregated curves."""
    if fig_id not in FIGURES:
        raise FigureError(f"unknown figure id {fig_id!r}")
    spec = FIGURES[fig_id]
    rows = load_rows(csv_path)
    data = curves(rows, spec["metric"], spec["x"], spec["per_dof"])

    if spec["reciprocal_panel"]:
        fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    else:
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        ax2 = None

    for dof, (xs, means, stds) in data.items():
        label = None if dof is None else f"dof = {dof:g}"
        plot_x = [math.sqrt(x) for x in xs] if spec["sqrt_x"] else xs
        ax.errorbar(plot_x, means, yerr=stds, marker="o", markersize=3, capsize=2, label=label)
        if ax2 is not None:
            recip = [1.0 / m if m > 0 else math.nan for m in means]
            ax2.plot(plot_x, recip, marker="o", markersize=3, label=label)

    xlabel = X_LABELS[spec["x"]]
    if spec["sqrt_x"]:
        xlabel = "sqrt(" + xlabel + ")"
    ax.set_xlabel(xlabel)
    ax.set_ylabel(Y_LABELS[spec["metric"]])
    ax.set_title(fig_id)
    if spec["per_dof"]:
        ax.legend()
    if ax2 is not None:
        ax2.set_xlabel(xlabel)
        ax2.set_ylabel("1 / " + Y_LABELS[spec["metric"]])
        if spec["per_dof"]:
            ax2.legend()
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Date": None} if str(out_path).endswith(".svg") else None)
    plt.close(fig)
    return data
