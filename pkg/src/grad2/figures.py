"""Parameter sets for the reference phase-portrait experiments and their runner."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import classify_regime, verify_energy_dissipation
from .dynamics import State, SystemConfig
from .errors import InputError
from .integrators import IntegratorSettings, Trajectory, integrate
from .io import write_trajectory_csv
from .potentials import PotentialSpec, double_well, exponential, find_equilibria, quadratic
from .svg import render_phase_svg

# conservative runs use leapfrog at this step; damped runs use the adaptive pair
LEAPFROG_STEP = 1e-3


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    potential: PotentialSpec
    runs: tuple[tuple[float, tuple[float, float]], ...]  # (a, (u0, v0))
    t_max: float
    stride: float
    title: str

    def label(self, a: float, ic: tuple[float, float], by_damping: bool) -> str:
        return f"a{a:g}" if by_damping else f"u{ic[0]:g}_v{ic[1]:g}"

    @property
    def varies_damping(self) -> bool:
        return len({a for a, _ in self.runs}) > 1


def _fixed(a, ics):
    return tuple((a, ic) for ic in ics)


def _sweep(ic, a_values):
    return tuple((a, ic) for a in a_values)


FIGURES: dict[str, FigureRecipe] = {
    r.figure_id: r
    for r in (
        FigureRecipe("quad_sweep", quadratic(), _sweep((2.0, 0.0), (0.0, 0.5, 1.0, 2.0, 3.5, 6.0)),
                     15.0, 0.05, "Quadratic potential, damping sweep"),
        FigureRecipe("quad_conservative", quadratic(),
                     _fixed(0.0, ((-0.5, -1.0), (2.0, 0.0), (-2.0, -1.0), (0.0, 2.5))),
                     25.0, 0.05, "Quadratic potential, a = 0"),
        FigureRecipe("dw_damped", double_well(),
                     _fixed(0.3, ((-1.5, 0.5), (1.5, -0.2), (0.01, 0.0), (-0.01, 0.0), (0.0, 2.0))),
                     40.0, 0.05, "Double well, a = 0.3"),
        FigureRecipe("dw_conservative", double_well(),
                     _fixed(0.0, ((1.0, 0.5), (-1.0, -0.5), (0.0, 1.2), (0.0, 0.72))),
                     30.0, 0.05, "Double well, a = 0"),
        FigureRecipe("exp_damped", exponential(),
                     _fixed(0.5, ((1.5, 1.0), (-1.5, -0.5), (0.0, 2.0), (0.5, -2.0))),
                     25.0, 0.05, "Exponential potential, a = 0.5"),
        FigureRecipe("exp_conservative", exponential(),
                     _fixed(0.0, ((0.3, 0.0), (0.8, 0.0), (1.3, 0.0), (0.0, 1.5))),
                     15.0, 0.01, "Exponential potential, a = 0"),
        FigureRecipe("exp_sweep", exponential(), _sweep((1.5, 0.0), (0.5, 1.0, 2.0, 3.5, 5.0)),
                     20.0, 0.05, "Exponential potential, damping sweep"),
    )
}


@dataclass
class FigureRun:
    label: str
    system: SystemConfig
    trajectory: Trajectory
    nearest_minimum: np.ndarray
    terminal_distance: float


def run_figure(figure_id: str, settings: IntegratorSettings | None = None) -> tuple[FigureRecipe, list[FigureRun]]:
    """Integrate every run of a recipe; no files are written."""
    if figure_id not in FIGURES:
        raise InputError(f"figure_id: unknown figure {figure_id!r}; expected one of {sorted(FIGURES)}")
    rec = FIGURES[figure_id]
    settings = (settings or IntegratorSettings()).with_(sample_stride=rec.stride)
    eq = find_equilibria(rec.potential, [(-3.0, 3.0)], grid_per_axis=41)
    minima = np.array(eq.minima())
    out = []
    for a, ic in rec.runs:
        s = SystemConfig(rec.potential, a)
        z0 = State([ic[0]], [ic[1]])
        method = "leapfrog" if a == 0 and not rec.varies_damping else "adaptive"
        traj = integrate(s, z0, rec.t_max, settings, method=method, h=LEAPFROG_STEP)
        zf = traj.phase()[-1]
        d = np.abs(zf[0] - minima[:, 0]) + abs(zf[1])
        k = int(np.argmin(d))
        out.append(FigureRun(rec.label(a, ic, rec.varies_damping), s, traj, minima[k], float(d[k])))
    return rec, out


def _report(rec: FigureRecipe, runs: list[FigureRun]) -> str:
    lines = [f"figure {rec.figure_id}: {rec.title}",
             f"potential {rec.potential.kind}, t in [0, {rec.t_max:g}], stride {rec.stride:g}", ""]
    for r in runs:
        zf = r.trajectory.phase()[-1]
        head = f"{r.label}: a={r.system.a:g} method={r.trajectory.method} final=({zf[0]:.9g}, {zf[1]:.9g})"
        if r.system.a == 0:
            drift = verify_energy_dissipation(r.trajectory, r.system).max_residual
            lines.append(f"{head} energy_drift={drift:.3e}")
        else:
            regime = classify_regime(r.trajectory, r.nearest_minimum)
            m = round(float(r.nearest_minimum[0]), 9) + 0.0
            lines.append(f"{head} nearest_minimum={m:g} distance={r.terminal_distance:.3e} "
                         f"regime={regime.classification}")
    return "\n".join(lines) + "\n"


def reproduce(figure_id: str, out_dir, plot: bool = True, settings: IntegratorSettings | None = None) -> list[Path]:
    """Write ``trajectory_<label>.csv`` per run, ``report.txt`` and ``phase_<figure_id>.svg``."""
    rec, runs = run_figure(figure_id, settings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_trajectory_csv(out / f"trajectory_{r.label}.csv", r.trajectory, r.system) for r in runs]
    rp = out / "report.txt"
    rp.write_text(_report(rec, runs))
    written.append(rp)
    if plot:
        sp = out / f"phase_{rec.figure_id}.svg"
        render_phase_svg([(r.label, r.trajectory) for r in runs], sp, title=rec.title)
        written.append(sp)
    return written
