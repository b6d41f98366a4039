"""Trace CSV, report JSON and long-form plot-data files."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .simulator import FOLLOWER_FIELDS, STATUS_CODES, VEHICLE_FIELDS, Trace


def _rows(trace: Trace, decimation: int) -> np.ndarray:
    if decimation < 1:
        raise ValueError(f"decimation must be >= 1, got {decimation}")
    return np.arange(0, trace.n_rows, decimation)


def write_trace_csv(trace: Trace, path, decimation: int = 1) -> int:
    """Write every decimation-th row; floats use the shortest round-trip repr.

    Returns the number of data rows written.
    """
    rows = _rows(trace, decimation)
    columns = [list(map(repr, trace.t[rows].tolist()))]
    for i in range(trace.n_followers + 1):
        for name in VEHICLE_FIELDS:
            columns.append(list(map(repr, getattr(trace, name)[rows, i].tolist())))
    names = trace.status_names()
    for j in range(trace.n_followers):
        for name in FOLLOWER_FIELDS:
            columns.append(list(map(repr, getattr(trace, name)[rows, j].tolist())))
        columns.append(names[rows, j].tolist())
    # fields never contain commas or quotes, so plain joins are valid CSV
    with open(path, "w") as fh:
        fh.write(",".join(trace.columns()) + "\n")
        fh.writelines(",".join(row) + "\n" for row in zip(*columns))
    return len(rows)


def read_trace_csv(path, dt: float | None = None) -> Trace:
    """Read a trace written by :func:`write_trace_csv`.

    ``dt`` defaults to the spacing of the first two rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = list(reader)
    n = sum(1 for c in header if c.startswith("status_"))
    index = {name: k for k, name in enumerate(header)}
    cols = list(zip(*body)) if body else [()] * len(header)

    def col(name):
        return np.array([float(v) for v in cols[index[name]]])

    t = col("t")
    if dt is None:
        if t.size < 2:
            raise ValueError("cannot infer dt from a single-row trace; pass dt")
        dt = float(t[1] - t[0])
    trace = Trace(n, dt, len(body))
    trace.n_rows = len(body)
    trace.t = t
    for name in VEHICLE_FIELDS:
        setattr(trace, name, np.column_stack([col(f"{name}_{i}") for i in range(n + 1)]))
    for name in FOLLOWER_FIELDS:
        setattr(trace, name, np.column_stack([col(f"{name}_{i}") for i in range(1, n + 1)]))
    trace.status = np.column_stack(
        [
            np.array([STATUS_CODES[s] for s in cols[index[f"status_{i}"]]], dtype=np.int8)
            for i in range(1, n + 1)
        ]
    )
    return trace


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def report_to_json(report: dict) -> str:
    """Stable JSON text; non-finite floats become null."""
    return json.dumps(_clean(report), indent=2)


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_to_json(report) + "\n")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


PLOT_FILES = {
    "trajectories": "fig_trajectories.csv",
    "distance_errors": "fig_distance_errors.csv",
    "bearing_errors": "fig_bearing_errors.csv",
    "distances": "fig_distances.csv",
}


def write_plot_data(trace: Trace, constraints, out_dir, decimation: int = 1) -> dict:
    """Long-form CSVs (one row per time and vehicle) for the four standard figures.

    Returns {figure name: path}.
    """
    os.makedirs(out_dir, exist_ok=True)
    rows = _rows(trace, decimation)
    t = trace.t[rows].tolist()
    paths = {}

    def dump(key, header, vehicles, fields):
        path = os.path.join(out_dir, PLOT_FILES[key])
        ts = [repr(tk) for tk in t]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for col, vid in vehicles:
                series = [list(map(repr, f(col))) for f in fields]
                vs = str(vid)
                fh.writelines(",".join(cells) + "\n" for cells in zip(ts, [vs] * len(ts), *series))
        paths[key] = path

    n = trace.n_followers
    followers = [(j, j + 1) for j in range(n)]

    def pick(name):
        arr = getattr(trace, name)
        return lambda col: arr[rows, col].tolist()

    def const(value):
        return lambda col: [value] * len(rows)

    dump("trajectories", ["t", "vehicle", "x", "y"], [(i, i) for i in range(n + 1)], [pick("x"), pick("y")])
    dump("distance_errors", ["t", "vehicle", "e_d", "lb_d", "ub_d"], followers,
         [pick("e_d"), pick("lb_d"), pick("ub_d")])
    dump("bearing_errors", ["t", "vehicle", "e_beta", "lb_beta", "ub_beta"], followers,
         [pick("e_beta"), pick("lb_beta"), pick("ub_beta")])
    dump("distances", ["t", "vehicle", "d", "d_col", "d_con"], followers,
         [pick("d"), const(constraints.d_col), const(constraints.d_con)])
    return paths
