"""Command-line front end: ``grad2 <command> [flags]``.

Every command accepts the same system and integrator flags; a JSON file given
with ``--config`` supplies defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .dynamics import State, SystemConfig, decay_constants, energy
from .errors import Grad2Error, InputError, NumericError
from .figures import FIGURES, reproduce
from .integrators import IntegratorSettings, integrate
from .io import write_trajectory_csv
from .potentials import KINDS, estimate_local_constants, from_config
from .svg import render_phase_svg

COMMANDS = ("simulate", "sweep", "basin", "decay", "critical", "conserve", "verify")
METHODS = ("adaptive", "rk4", "leapfrog")
# options whose value may begin with '-' (e.g. --ic "-1.5,0.5")
_VALUE_FLAGS = ("--ic", "--ustar", "--a", "--a-values", "--a-range", "--grid", "--param")

DEFAULTS = {
    "potential": "quadratic",
    "params": {},
    "a": 1.0,
    "ustar": None,
    "ic": None,
    "t_max": 20.0,
    "stride": 0.05,
    "rel_tol": 1e-9,
    "abs_tol": 1e-12,
    "method": "adaptive",
    "h": 1e-3,
    "out": "grad2_out",
    "plot": True,
    "threads": None,
    "label": None,
    "a_values": [0.0, 0.5, 1.0, 2.0, 3.5, 6.0],
    "a_range": [0.5, 4.0],
    "tol": None,
    "grid": [-2.0, 2.0, -2.0, 2.0],
    "cells": 21,
    "conv_tol": 1e-2,
    "radius": 0.5,
    "window": 0.5,
}


@dataclass
class RunConfig:
    command: str
    system: SystemConfig
    t_max: float
    settings: IntegratorSettings
    method: str = "adaptive"
    h: float = 1e-3
    ic: State | None = None
    grid: analysis.BasinGrid | None = None
    out: Path = Path("grad2_out")
    plot: bool = True
    threads: int = 1
    label: str = "run"
    options: dict = field(default_factory=dict)


# -- parsing ----------------------------------------------------------------

def _floats(field_name: str, value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
    else:
        parts = list(value)
    try:
        out = [float(p) for p in parts]
    except (TypeError, ValueError):
        raise InputError(f"{field_name}: expected comma-separated reals, got {value!r}") from None
    if not all(math.isfinite(v) for v in out):
        raise InputError(f"{field_name}: values must be finite, got {value!r}")
    return out


def _real(field_name: str, value, positive: bool = False, nonneg: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{field_name}: expected a real number, got {value!r}") from None
    if not math.isfinite(v):
        raise InputError(f"{field_name}: must be finite, got {value!r}")
    if positive and not v > 0:
        raise InputError(f"{field_name}: must be positive, got {value!r}")
    if nonneg and v < 0:
        raise InputError(f"{field_name}: must be nonnegative, got {value!r}")
    return v


def _params(pairs) -> dict:
    if isinstance(pairs, dict):
        return dict(pairs)
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise InputError(f"param: expected k=v, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _real(f"param {k.strip()}", v)
    return out


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system and integrator")
    g.add_argument("--config", help="JSON file with default values; flags override it")
    g.add_argument("--potential", help=f"potential kind, one of {', '.join(KINDS)}")
    g.add_argument("--param", action="append", metavar="K=V", help="potential parameter (repeatable)")
    g.add_argument("--a", help="damping coefficient a >= 0")
    g.add_argument("--ustar", help="reference equilibrium, comma-separated")
    g.add_argument("--ic", help="initial state: positions then velocities, comma-separated")
    g.add_argument("--t-max", dest="t_max", help="final time")
    g.add_argument("--stride", help="output sample spacing")
    g.add_argument("--rel-tol", dest="rel_tol", help="relative tolerance (adaptive)")
    g.add_argument("--abs-tol", dest="abs_tol", help="absolute tolerance (adaptive)")
    g.add_argument("--method", choices=METHODS)
    g.add_argument("--h", help="step for the fixed-step methods")
    g.add_argument("--out", help="output directory")
    g.add_argument("--plot", action=argparse.BooleanOptionalAction, default=None, help="write SVG phase portraits")
    g.add_argument("--threads", help="worker processes (default: GRAD2_THREADS or 1)")
    g.add_argument("--label", help="file label for single-run commands")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grad2", description="Simulate and verify damped gradient systems.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", help="integrate one initial condition")
    _common(p)
    p = sub.add_parser("sweep", help="one initial condition across several damping values")
    _common(p)
    p.add_argument("--a-values", dest="a_values", help="comma-separated damping values")
    p = sub.add_parser("basin", help="basin-of-attraction map on a phase-space grid")
    _common(p)
    p.add_argument("--grid", help="lo,hi per phase-space axis (positions then velocities)")
    p.add_argument("--cells", help="cells per axis")
    p.add_argument("--conv-tol", dest="conv_tol", help="assignment tolerance")
    p = sub.add_parser("decay", help="fit the exponential decay rate and compare with the certified rate")
    _common(p)
    p.add_argument("--radius", help="ball radius for the local constants")
    p.add_argument("--window", help="fraction of the run used by the fit")
    p = sub.add_parser("critical", help="bisect for the onset of oscillation")
    _common(p)
    p.add_argument("--a-range", dest="a_range", help="lo,hi bracket")
    p.add_argument("--tol", help="bracket width at which bisection stops")
    p = sub.add_parser("conserve", help="closed-orbit and energy-drift check for a = 0")
    _common(p)
    p.add_argument("--tol", help="return tolerance")
    p = sub.add_parser("verify", help="energy, Lyapunov and exponential-bound checks on one run")
    _common(p)
    p.add_argument("--radius", help="ball radius for the local constants")
    p = sub.add_parser("reproduce", help="regenerate a reference figure's data and portrait")
    p.add_argument("figure_id", choices=sorted(FIGURES) + ["all"])
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=None)
    return parser


def _normalize_argv(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config: malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(cfg, dict):
        raise InputError("config: top level must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - set(DEFAULTS) - {"command"}
    if unknown:
        raise InputError(f"config: unknown field(s) {sorted(unknown)}")
    return cfg


def merged_options(ns: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(ns, "config", None):
        cfg = _load_config(ns.config)
        if "command" in cfg and cfg["command"] != ns.command:
            raise InputError(f"command: config says {cfg['command']!r}, command line says {ns.command!r}")
        cfg.pop("command", None)
        opts.update(cfg)
    for k in DEFAULTS:
        v = getattr(ns, k, None)
        if v is not None:
            opts[k] = v
    if getattr(ns, "param", None):
        opts["params"] = {**_params(opts.get("params")), **_params(ns.param)}
    return opts


def _threads(value) -> int:
    if value is None:
        env = os.environ.get("GRAD2_THREADS")
        if env is None:
            return 1
        value, name = env, "GRAD2_THREADS"
    else:
        name = "threads"
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise InputError(f"{name}: expected a positive integer, got {value!r}") from None
    if n < 1:
        raise InputError(f"{name}: expected a positive integer, got {value!r}")
    return n


def build_run_config(command: str, opts: dict) -> RunConfig:
    """Validate merged options; every error names the offending field."""
    if command not in COMMANDS:
        raise InputError(f"command: unknown command {command!r}")
    ic = None if opts["ic"] is None else _floats("ic", opts["ic"])
    if ic is not None and (len(ic) == 0 or len(ic) % 2):
        raise InputError(f"ic: need an even number of components (positions then velocities), got {len(ic)}")
    ustar = None if opts["ustar"] is None else _floats("ustar", opts["ustar"])
    dim = len(ic) // 2 if ic else (len(ustar) if ustar else None)
    pot_cfg = opts["potential"]
    if isinstance(pot_cfg, str):
        pot_cfg = {"kind": pot_cfg}
    if not isinstance(pot_cfg, dict):
        raise InputError(f"potential: expected a kind name or an object, got {pot_cfg!r}")
    params = _params(opts.get("params"))
    if params:
        pot_cfg = {**pot_cfg, "params": {**pot_cfg.get("params", {}), **params}}
    try:
        pot = from_config(pot_cfg, dimension=dim)
    except InputError as exc:
        raise InputError(f"potential: {exc}") from None
    a = _real("a", opts["a"])
    if a < 0:
        raise InputError(f"a: damping must be nonnegative, got {opts['a']!r}")
    if ustar is not None and len(ustar) != pot.dimension:
        raise InputError(f"ustar: has {len(ustar)} components, potential dimension is {pot.dimension}")
    if ustar is None:
        km = pot.known_minimizer()
        ustar = None if km is None else list(km)
    try:
        system = SystemConfig(pot, a, ustar)
    except InputError as exc:
        raise InputError(f"ustar: {exc}") from None
    state = None
    if ic is not None:
        if len(ic) != 2 * pot.dimension:
            raise InputError(f"ic: has {len(ic)} components, expected {2 * pot.dimension}")
        state = State(ic[: pot.dimension], ic[pot.dimension :])
    elif command not in ("basin",):
        raise InputError("ic: an initial condition is required for this command")
    t_max = _real("t_max", opts["t_max"], positive=True)
    try:
        settings = IntegratorSettings(
            rel_tol=_real("rel_tol", opts["rel_tol"], positive=True),
            abs_tol=_real("abs_tol", opts["abs_tol"], positive=True),
            sample_stride=_real("stride", opts["stride"], positive=True),
        )
    except InputError:
        raise
    method = opts["method"]
    if method not in METHODS:
        raise InputError(f"method: expected one of {METHODS}, got {method!r}")
    if method == "leapfrog" and a != 0:
        raise InputError(f"method: leapfrog requires a = 0, got a = {a:g}")
    h = _real("h", opts["h"], positive=True)
    options = {}
    grid = None
    if command == "sweep":
        av = _floats("a_values", opts["a_values"])
        if not av or any(v < 0 for v in av):
            raise InputError("a_values: need a non-empty list of nonnegative reals")
        options["a_values"] = av
    elif command == "critical":
        ar = _floats("a_range", opts["a_range"])
        if len(ar) != 2 or not 0 < ar[0] < ar[1]:
            raise InputError(f"a_range: need lo,hi with 0 < lo < hi, got {opts['a_range']!r}")
        options["a_range"] = tuple(ar)
        options["tol"] = _real("tol", opts["tol"] if opts["tol"] is not None else 1e-2, positive=True)
    elif command == "conserve":
        if a != 0:
            raise InputError(f"a: conserve needs a = 0, got {a:g}")
        options["tol"] = _real("tol", opts["tol"] if opts["tol"] is not None else 1e-6, positive=True)
    elif command == "basin":
        if a <= 0:
            raise InputError(f"a: basin maps need a > 0, got {a:g}")
        bounds = _floats("grid", opts["grid"])
        if len(bounds) != 4 * pot.dimension:
            raise InputError(f"grid: need lo,hi for each of {2 * pot.dimension} phase-space axes")
        cells = opts["cells"]
        counts = [int(c) for c in (_floats("cells", cells) if not isinstance(cells, int) else [cells])]
        if len(counts) == 1:
            counts = counts * (2 * pot.dimension)
        if len(counts) != 2 * pot.dimension or min(counts) < 1:
            raise InputError(f"cells: need one positive count or one per axis, got {cells!r}")
        iv = tuple((bounds[2 * i], bounds[2 * i + 1]) for i in range(2 * pot.dimension))
        if any(not hi > lo for lo, hi in iv):
            raise InputError(f"grid: each interval needs lo < hi, got {iv}")
        grid = analysis.BasinGrid(iv, tuple(counts))
        options["conv_tol"] = _real("conv_tol", opts["conv_tol"], positive=True)
    elif command in ("decay", "verify"):
        if a <= 0:
            raise InputError(f"a: {command} needs a > 0, got {a:g}")
        options["radius"] = _real("radius", opts["radius"], positive=True)
        w = _real("window", opts["window"], positive=True)
        if w > 1:
            raise InputError(f"window: must lie in (0, 1], got {w}")
        options["window"] = w
    label = opts["label"] or command
    if any(c in str(label) for c in "/\\"):
        raise InputError(f"label: must not contain path separators, got {label!r}")
    return RunConfig(
        command=command, system=system, t_max=t_max, settings=settings, method=method, h=h,
        ic=state, grid=grid, out=Path(opts["out"]), plot=bool(opts["plot"]),
        threads=_threads(opts["threads"]), label=str(label), options=options,
    )


# -- commands ---------------------------------------------------------------

def _fmt_state(z: State) -> str:
    return "(" + ", ".join(f"{v:.9g}" for v in np.concatenate((z.x, z.y))) + ")"


def _header(cfg: RunConfig) -> list[str]:
    s = cfg.system
    return [
        f"command: {cfg.command}",
        f"potential: {json.dumps(s.potential.to_config(), sort_keys=True)}",
        f"a: {s.a:g}",
        f"u_star: {list(s.u_star)}",
        f"t_max: {cfg.t_max:g}",
        f"method: {cfg.method}",
        "",
    ]


def _write_run(cfg: RunConfig, label: str, traj, system: SystemConfig) -> None:
    write_trajectory_csv(cfg.out / f"trajectory_{label}.csv", traj, system)


def _simulate(cfg: RunConfig) -> list[str]:
    s = cfg.system
    traj = integrate(s, cfg.ic, cfg.t_max, cfg.settings, cfg.method, cfg.h)
    _write_run(cfg, cfg.label, traj, s)
    if cfg.plot:
        render_phase_svg([(cfg.label, traj)], cfg.out / f"phase_{cfg.label}.svg")
    e0, e1 = energy(s, traj.initial), energy(s, traj.final)
    lines = [
        f"initial: {_fmt_state(traj.initial)}",
        f"final:   {_fmt_state(traj.final)}",
        f"distance to u_star at t_max: {traj.distance_to(s.ustar)[-1]:.6e}",
        f"energy: {e0:.12g} -> {e1:.12g}",
        f"energy balance residual: {analysis.verify_energy_dissipation(traj, s).max_residual:.3e}",
        f"steps accepted/rejected: {traj.steps_accepted}/{traj.steps_rejected}",
    ]
    if s.a > 0:
        mono = analysis.verify_lyapunov_monotonicity(traj, s)
        note = "monotone" if mono.passed else "not monotone over the whole run (the decrease is guaranteed near u_star)"
        lines.append(f"Lyapunov V_a: max increase between samples {mono.max_increase:.3e}, {note}")
    reg = analysis.classify_regime(traj, s.ustar)
    lines.append(f"regime: {reg.classification} ({reg.crossings} crossings)")
    return lines


def _sweep(cfg: RunConfig) -> list[str]:
    res = analysis.damping_sweep(cfg.system, cfg.ic, cfg.options["a_values"], cfg.t_max, cfg.settings,
                                 workers=cfg.threads)
    lines, plotted = [], []
    failed = []
    for e in res.entries:
        label = f"a{e.a:g}"
        if e.trajectory is None:
            lines.append(f"{label}: integration failed: {e.error}")
            failed.append(label)
            continue
        _write_run(cfg, label, e.trajectory, cfg.system.with_damping(e.a))
        plotted.append((label, e.trajectory))
        fit = f"gamma_fit={e.fit.gamma_fit:.6g} c_fit={e.fit.c_fit:.6g}" if e.fit else "no fit"
        ttt = f"{e.time_to_tolerance:g}" if e.time_to_tolerance is not None else "not reached"
        lines.append(f"{label}: regime={e.regime.classification} crossings={e.regime.crossings} {fit} "
                     f"time_to_1e-3={ttt}")
    lines.append(f"uniform sup over t and a>0 of |x-u*|+|y|: {res.uniform_sup:.6g}")
    lines.append("gamma_fit trend: " + ", ".join(f"a={a:g}:{g:.4g}" for a, g in res.gamma_trend))
    if cfg.plot and plotted:
        render_phase_svg(plotted, cfg.out / f"phase_{cfg.label}.svg")
    if failed:
        raise _Partial(lines, f"integration failed for {', '.join(failed)}")
    return lines


def _basin(cfg: RunConfig) -> list[str]:
    bm = analysis.basin_map(cfg.system, cfg.grid, cfg.t_max, cfg.options["conv_tol"], workers=cfg.threads)
    n = cfg.system.dimension
    path = cfg.out / f"basin_{cfg.label}.csv"
    cols = [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols + ["equilibrium", "terminal_distance"]) + "\n")
        for z, k, d in zip(bm.initial_states, bm.assignment, bm.terminal_distance):
            tag = "unresolved" if k is None else str(k)
            fh.write(",".join(format(float(v), ".17g") for v in z) + f",{tag},{float(d):.17g}\n")
    lines = ["equilibria:"]
    for i, (pt, c) in enumerate(zip(bm.equilibria.points, bm.equilibria.classifications)):
        count = sum(1 for k in bm.assignment if k == i)
        coords = ", ".join(f"{float(v):.9g}" for v in np.round(pt, 12) + 0.0)
        lines.append(f"  [{i}] ({coords}) {c}: {count} cells")
    lines.append(f"  unresolved: {sum(1 for k in bm.assignment if k is None)} cells")
    return lines


def _decay(cfg: RunConfig) -> list[str]:
    s = cfg.system
    traj = integrate(s, cfg.ic, cfg.t_max, cfg.settings, cfg.method, cfg.h)
    _write_run(cfg, cfg.label, traj, s)
    if cfg.plot:
        render_phase_svg([(cfg.label, traj)], cfg.out / f"phase_{cfg.label}.svg")
    fit = analysis.fit_decay_rate(traj, s.ustar, cfg.options["window"])
    lines = [f"fit window: [{fit.window[0]:g}, {fit.window[1]:g}]",
             f"gamma_fit: {fit.gamma_fit:.8g}", f"c_fit: {fit.c_fit:.8g}", f"rms residual: {fit.rms_residual:.3e}"]
    try:
        lc = estimate_local_constants(s.potential, s.ustar, cfg.options["radius"])
    except NumericError as exc:
        lines.append(f"certified rate unavailable: {exc}")
        return lines
    dc = decay_constants(s, lc)
    lines += [f"local constants: alpha={lc.alpha:.6g} beta={lc.beta:.6g} mu={lc.mu:.6g} radius={lc.radius:g}",
              f"m1={dc.m1:.6g} m2={dc.m2:.6g} gamma={dc.gamma:.6g}",
              f"gamma_fit / gamma: {fit.gamma_fit / dc.gamma:.4g}"]
    return lines


def _critical(cfg: RunConfig) -> list[str]:
    a_star = analysis.find_critical_damping(cfg.system, cfg.ic, cfg.options["a_range"], cfg.options["tol"],
                                            t_max=max(cfg.t_max, 1.0))
    return [f"bracket: {cfg.options['a_range']}", f"tolerance: {cfg.options['tol']:g}",
            f"critical damping estimate: {a_star:.6f}"]


def _conserve(cfg: RunConfig) -> list[str]:
    s = cfg.system
    traj = integrate(s, cfg.ic, cfg.t_max, cfg.settings, cfg.method, cfg.h)
    _write_run(cfg, cfg.label, traj, s)
    if cfg.plot:
        render_phase_svg([(cfg.label, traj)], cfg.out / f"phase_{cfg.label}.svg")
    es = analysis.verify_energy_dissipation(traj, s)
    orbit = analysis.closed_orbit_check(s, cfg.ic, cfg.t_max, cfg.options["tol"], cfg.h)
    period = f"{orbit.period:.10g}" if orbit.period is not None else "none within t_max"
    return [f"energy drift (max |E(t) - E(0)|): {es.max_residual:.3e}",
            f"closed orbit period: {period}", f"return distance: {orbit.return_distance:.3e}"]


def _verify(cfg: RunConfig) -> list[str]:
    s = cfg.system
    traj = integrate(s, cfg.ic, cfg.t_max, cfg.settings, cfg.method, cfg.h)
    _write_run(cfg, cfg.label, traj, s)
    if cfg.plot:
        render_phase_svg([(cfg.label, traj)], cfg.out / f"phase_{cfg.label}.svg")
    lc = estimate_local_constants(s.potential, s.ustar, cfg.options["radius"])
    es = analysis.verify_energy_dissipation(traj, s)
    mono = analysis.verify_lyapunov_monotonicity(traj, s, ball_radius=lc.radius)
    bound = analysis.verify_exponential_bound(traj, s, lc)
    e_ok = es.max_residual <= 1e-4 * (1 + abs(energy(s, traj.initial)))
    lines = [
        f"local constants: alpha={lc.alpha:.6g} beta={lc.beta:.6g} mu={lc.mu:.6g} radius={lc.radius:g}",
        f"energy balance: {'pass' if e_ok else 'FAIL'} (residual {es.max_residual:.3e})",
        f"Lyapunov monotonicity: {'pass' if mono.passed else 'FAIL'} "
        f"(max increase {mono.max_increase:.3e} over {mono.pairs_checked} pairs)",
        f"exponential bound: {'pass' if bound.holds() else 'FAIL'} (gamma={bound.gamma:.6g}, "
        f"max V ratio {bound.lyapunov_ratio:.6g}, max norm ratio {bound.norm_ratio:.6g})",
    ]
    if not (e_ok and mono.passed and bound.holds()):
        raise _Partial(lines, "one or more verdicts failed")
    return lines


class _Partial(NumericError):
    """A command that produced a report but whose verdict is a numeric failure."""

    def __init__(self, lines, message):
        super().__init__(message)
        self.lines = lines


_HANDLERS = {
    "simulate": _simulate, "sweep": _sweep, "basin": _basin, "decay": _decay,
    "critical": _critical, "conserve": _conserve, "verify": _verify,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration and write its files; returns the exit status."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    status, tail = 0, []
    try:
        lines = _HANDLERS[cfg.command](cfg)
    except _Partial as exc:
        lines, status, tail = exc.lines, 3, [f"verdict: {exc}"]
    (cfg.out / "report.txt").write_text("\n".join(_header(cfg) + lines + tail) + "\n")
    if status:
        raise NumericError(str(tail[0]))
    return 0


def _reproduce(ns) -> int:
    ids = sorted(FIGURES) if ns.figure_id == "all" else [ns.figure_id]
    base = Path(ns.out or "grad2_figures")
    plot = True if ns.plot is None else ns.plot
    for fid in ids:
        reproduce(fid, base / fid if len(ids) > 1 else base, plot=plot)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(_normalize_argv(argv))
    try:
        if ns.command == "reproduce":
            return _reproduce(ns)
        cfg = build_run_config(ns.command, merged_options(ns))
        return run(cfg)
    except InputError as exc:
        print(f"grad2: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError, OverflowError) as exc:
        print(f"grad2: numeric failure: {exc}", file=sys.stderr)
        return 3
    except Grad2Error as exc:
        print(f"grad2: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
