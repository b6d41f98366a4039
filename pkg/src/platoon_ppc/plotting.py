"""Render the plot-data CSVs to PNG figures with matplotlib."""

from __future__ import annotations

import math
import os

import numpy as np

from .traceio import PLOT_FILES

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _load(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    veh_col = header.index("vehicle")
    series = {}
    for veh in np.unique(data[:, veh_col]).astype(int).tolist():
        block = data[data[:, veh_col] == veh]
        series[veh] = {name: block[:, k] for k, name in enumerate(header) if k != veh_col}
    return series


def _grid(n):
    cols = 2 if n > 1 else 1
    return int(math.ceil(n / cols)), cols


def _envelope_figure(plt, series, key, lb, ub, ylabel, scale, title):
    n = len(series)
    rows, cols = _grid(n)
    fig, axes = plt.subplots(rows, cols, figsize=(7, 1.6 * rows + 0.6), sharex=True, squeeze=False)
    for ax, (veh, s) in zip(axes.flat, sorted(series.items())):
        t = s["t"]
        ax.plot(t, scale * s[key], color="C0", label="error")
        ax.plot(t, scale * s[lb], "--", color="C3", label="bounds")
        ax.plot(t, scale * s[ub], "--", color="C3")
        ax.set_title(f"vehicle {veh}")
        ax.set_ylabel(ylabel)
    for ax in list(axes.flat)[n:]:
        ax.set_visible(False)
    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    axes.flat[0].legend(loc="upper right")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def render_figures(plot_dir, out_dir=None) -> dict:
    """Write trajectories/distance_errors/bearing_errors/distances PNGs.

    Reads the long-form CSVs written by :func:`traceio.write_plot_data` from
    ``plot_dir``; figures go to ``out_dir`` (defaults to ``plot_dir``).
    Returns {figure name: png path}.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = out_dir or plot_dir
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    with plt.rc_context(RC):
        traj = _load(os.path.join(plot_dir, PLOT_FILES["trajectories"]))
        fig, ax = plt.subplots(figsize=(5, 4))
        for veh, s in sorted(traj.items()):
            label = "leader" if veh == 0 else f"vehicle {veh}"
            ax.plot(s["x"], s["y"], color="k" if veh == 0 else None, label=label)
            ax.plot(s["x"][-1], s["y"][-1], "o", ms=3, color=ax.lines[-1].get_color())
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(ncol=2)
        fig.tight_layout()
        paths["trajectories"] = _save(fig, plt, out_dir, "trajectories")

        dist_err = _load(os.path.join(plot_dir, PLOT_FILES["distance_errors"]))
        fig = _envelope_figure(plt, dist_err, "e_d", "lb_d", "ub_d", "e_d [m]", 1.0, "distance errors")
        paths["distance_errors"] = _save(fig, plt, out_dir, "distance_errors")

        bear_err = _load(os.path.join(plot_dir, PLOT_FILES["bearing_errors"]))
        fig = _envelope_figure(
            plt, bear_err, "e_beta", "lb_beta", "ub_beta", "e_beta [deg]", 180.0 / math.pi, "bearing errors"
        )
        paths["bearing_errors"] = _save(fig, plt, out_dir, "bearing_errors")

        dist = _load(os.path.join(plot_dir, PLOT_FILES["distances"]))
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for veh, s in sorted(dist.items()):
            ax.plot(s["t"], s["d"], label=f"d_{veh}")
        first = dist[min(dist)]
        ax.axhline(first["d_col"][0], color="C3", ls="--", label="d_col")
        ax.axhline(first["d_con"][0], color="C3", ls=":", label="d_con")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("d [m]")
        ax.legend(ncol=3)
        fig.tight_layout()
        paths["distances"] = _save(fig, plt, out_dir, "distances")
    return paths


def _save(fig, plt, out_dir, name):
    path = os.path.join(out_dir, f"fig_{name}.png")
    fig.savefig(path)
    plt.close(fig)
    return path
