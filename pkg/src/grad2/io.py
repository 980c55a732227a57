"""CSV trajectory files: header ``t,x1..xN,y1..yN,E,V``, 17 significant digits."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .dynamics import SystemConfig, energy_series, lyapunov_series
from .errors import InputError
from .integrators import Trajectory


def csv_header(n: int) -> list[str]:
    return ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)] + ["E", "V"]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_to_csv(traj: Trajectory, s: SystemConfig) -> str:
    e = energy_series(s, traj.xs, traj.ys)
    v = lyapunov_series(s, traj.xs, traj.ys)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(traj.dimension))
    for k in range(len(traj)):
        w.writerow([_fmt(traj.times[k]), *map(_fmt, traj.xs[k]), *map(_fmt, traj.ys[k]), _fmt(e[k]), _fmt(v[k])])
    return buf.getvalue()


def write_trajectory_csv(path, traj: Trajectory, s: SystemConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(trajectory_to_csv(traj, s))
    return path


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV into arrays keyed ``t``, ``x`` (n, N), ``y`` (n, N), ``E``, ``V``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    n = (len(header) - 3) // 2
    if header != csv_header(n):
        raise InputError(f"{path}: unexpected header {header}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return {"t": data[:, 0], "x": data[:, 1 : 1 + n], "y": data[:, 1 + n : 1 + 2 * n], "E": data[:, -2], "V": data[:, -1]}
