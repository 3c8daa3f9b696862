"""Trajectory CSV and metadata files.

CSV layout: header ``t, x_1..x_n, y_1..y_n, u_1.., v_1.., u_tilde_1.., v_tilde_1.., dev``
and one row per partition node.  Numbers carry 12 significant digits.  The
controls in row ``j`` are the ones active on ``[tau_j, tau_{j+1})``; the last
row repeats the values of the final cell.

Metadata files are flat ``key = value`` text.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .aiming import AimingConfig, SimulationResult
from .frac_core import GridFunction, TimeGrid

__all__ = ["fmt", "trajectory_header", "write_trajectory_csv", "read_trajectory_csv", "write_meta", "read_meta"]


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    return format(float(x), ".12g")


def trajectory_header(n: int, n_u: int, n_v: int) -> list[str]:
    cols = ["t"]
    cols += [f"x_{i + 1}" for i in range(n)]
    cols += [f"y_{i + 1}" for i in range(n)]
    cols += [f"u_{i + 1}" for i in range(n_u)]
    cols += [f"v_{i + 1}" for i in range(n_v)]
    cols += [f"u_tilde_{i + 1}" for i in range(n_u)]
    cols += [f"v_tilde_{i + 1}" for i in range(n_v)]
    cols.append("dev")
    return cols


def _held(values: np.ndarray) -> np.ndarray:
    return np.vstack([values, values[-1:]])


def write_trajectory_csv(path: str | Path, result: SimulationResult) -> None:
    x = result.x_traj.values
    y = result.y_traj.values
    u = _held(result.u_real.values)
    v = _held(result.v_real.values)
    ut = _held(result.u_tilde_real.values)
    vt = _held(result.v_tilde_real.values)
    header = trajectory_header(x.shape[1], u.shape[1], v.shape[1])
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for m, t in enumerate(result.grid.nodes):
            row = [t, *x[m], *y[m], *u[m], *v[m], *ut[m], *vt[m], result.deviation[m]]
            w.writerow([fmt(val) for val in row])


def read_trajectory_csv(path: str | Path) -> dict:
    """Read a trajectory CSV back into arrays keyed by column group.

    Returns a dict with ``grid``, ``x``, ``y`` (:class:`GridFunction`) and
    ``dev`` plus the raw ``columns`` and ``data``.
    """
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: rows do not match the header")
    col = {name: i for i, name in enumerate(header)}
    n = sum(1 for c in header if c.startswith("x_"))
    xs = data[:, [col[f"x_{i + 1}"] for i in range(n)]]
    ys = data[:, [col[f"y_{i + 1}"] for i in range(n)]]
    grid = TimeGrid(data[:, col["t"]])
    return {
        "grid": grid,
        "x": GridFunction(grid, xs),
        "y": GridFunction(grid, ys),
        "dev": data[:, col["dev"]],
        "columns": header,
        "data": data,
    }


def write_meta(path: str | Path, items: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for key, val in items.items():
            if isinstance(val, float):
                val = fmt(val)
            elif isinstance(val, (list, tuple, np.ndarray)):
                val = " ".join(fmt(v) for v in np.ravel(val))
            fh.write(f"{key} = {val}\n")


def read_meta(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def run_metadata(config: AimingConfig, result: SimulationResult, csv_name: str) -> dict:
    return {
        "format": "fracguide-meta v1",
        "csv": csv_name,
        "alpha": config.alpha,
        "T": config.T,
        "nodes": config.partition.size,
        "diameter": config.partition.diameter(),
        "substeps": config.substeps,
        "seed": "none" if result.seed is None else result.seed,
        "x0": config.x0,
        "y0": config.y0,
        "lambda_g": config.dyn.lambda_g,
        "c_g": config.dyn.c_g,
        "deviation_sup": result.deviation_sup,
        "deviation_final": float(result.deviation[-1]),
        "K": result.K,
        "eps": result.eps,
        "bound_rhs": result.bound_rhs,
    }
