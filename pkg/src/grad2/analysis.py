"""Verdicts on trajectories: Lyapunov monotonicity, energy balance, decay fits,
damping regimes, basins of attraction, closed orbits and damping sweeps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .dynamics import (
    State,
    SystemConfig,
    decay_constants,
    energy_series,
    lyapunov_series,
)
from .errors import (
    BracketError,
    ConfigurationError,
    DegenerateFitError,
    Grad2Error,
    InputError,
    PreconditionError,
)
from .integrators import (
    CONVERGED,
    ESCAPED,
    IntegratorSettings,
    Trajectory,
    _hermite,
    integrate_adaptive,
    integrate_batch,
    integrate_fixed,
)
from .potentials import EquilibriumSet, LocalConstants, find_equilibria

__all__ = [
    "MonotonicityReport",
    "EnergyReport",
    "DecayFit",
    "RegimeReport",
    "BasinGrid",
    "BasinMap",
    "OrbitReport",
    "SweepEntry",
    "SweepResult",
    "BoundReport",
    "verify_lyapunov_monotonicity",
    "verify_energy_dissipation",
    "verify_exponential_bound",
    "fit_decay_rate",
    "classify_regime",
    "find_critical_damping",
    "basin_map",
    "closed_orbit_check",
    "damping_sweep",
    "default_workers",
]

UNDERDAMPED = "underdamped"
NONOSCILLATORY = "nonoscillatory_decaying"
OSCILLATORY_NONDECAYING = "oscillatory_nondecaying"
INCONCLUSIVE = "inconclusive"


def default_workers() -> int:
    """Worker count from ``GRAD2_THREADS``; 1 when unset or malformed."""
    try:
        return max(1, int(os.environ.get("GRAD2_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn: Callable, items: Sequence, workers: int | None) -> list:
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so output is independent of scheduling
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _check_dims(traj: Trajectory, s: SystemConfig) -> None:
    if traj.dimension != s.dimension:
        raise InputError(f"trajectory has dimension {traj.dimension}, system has {s.dimension}")


# -- Lyapunov and energy checks ---------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    max_increase: float
    passed: bool
    pairs_checked: int


def verify_lyapunov_monotonicity(
    traj: Trajectory, s: SystemConfig, slack: float = 1e-7, ball_radius: float | None = None
) -> MonotonicityReport:
    """Largest increase of V_a between consecutive samples.

    With ``ball_radius`` only the final segment of samples that stays within
    that distance of ``u_star`` is scanned.
    """
    _check_dims(traj, s)
    if s.a <= 0:
        raise PreconditionError("Lyapunov monotonicity is a statement about a > 0")
    xs, ys = traj.xs, traj.ys
    if ball_radius is not None:
        outside = np.flatnonzero(np.linalg.norm(xs - s.ustar, axis=1) > ball_radius)
        start = outside[-1] + 1 if outside.size else 0
        xs, ys = xs[start:], ys[start:]
    v = lyapunov_series(s, xs, ys)
    if len(v) < 2:
        return MonotonicityReport(0.0, True, 0)
    inc = float(np.max(np.diff(v)))
    inc = max(inc, 0.0)
    return MonotonicityReport(inc, inc <= slack, len(v) - 1)


@dataclass(frozen=True)
class EnergyReport:
    max_residual: float
    residuals: np.ndarray = field(repr=False)


def verify_energy_dissipation(traj: Trajectory, s: SystemConfig) -> EnergyReport:
    """Residual of E(t) - E(0) + a * int_0^t |y|^2.

    The integral uses the trapezoid rule with its endpoint-derivative
    correction, exact for cubics: d|y|^2/dt = 2<y, -a y - grad W(x)> is known
    at every sample, so quadrature error stays far below the tolerance.
    """
    _check_dims(traj, s)
    if len(traj) < 2:
        raise InputError("need at least 2 samples")
    e = energy_series(s, traj.xs, traj.ys)
    y2 = np.sum(traj.ys**2, axis=1)
    acc = -s.a * traj.ys - s.potential.gradient(traj.xs)
    dy2 = 2.0 * np.sum(traj.ys * acc, axis=1)
    h = np.diff(traj.times)
    pieces = 0.5 * h * (y2[1:] + y2[:-1]) + h**2 / 12.0 * (dy2[:-1] - dy2[1:])
    integral = np.concatenate(([0.0], np.cumsum(pieces)))
    res = np.abs(e - e[0] + s.a * integral)
    return EnergyReport(float(res.max()), res)


@dataclass(frozen=True)
class BoundReport:
    """Worst-case ratios of observed quantities to their exponential envelopes.

    Both ratios are at most 1 when the bounds hold exactly.
    """

    gamma: float
    m1: float
    m2: float
    lyapunov_ratio: float
    norm_ratio: float

    def holds(self, rel: float = 1e-6) -> bool:
        return self.lyapunov_ratio <= 1 + rel and self.norm_ratio <= 1 + rel


def verify_exponential_bound(traj: Trajectory, s: SystemConfig, lc: LocalConstants) -> BoundReport:
    """Check V_a(t) <= V_a(0) e^{-gamma t} and |z(t)|^2 <= V_a(0)/m1 e^{-gamma t}."""
    _check_dims(traj, s)
    dc = decay_constants(s, lc)
    v = lyapunov_series(s, traj.xs, traj.ys)
    env = v[0] * np.exp(-dc.gamma * traj.times)
    norm2 = np.sum((traj.xs - s.ustar) ** 2, axis=1) + np.sum(traj.ys**2, axis=1)
    if v[0] == 0:
        return BoundReport(dc.gamma, dc.m1, dc.m2, 0.0 if np.all(v <= 0) else math.inf,
                           0.0 if np.all(norm2 == 0) else math.inf)
    return BoundReport(
        dc.gamma, dc.m1, dc.m2, float(np.max(v / env)), float(np.max(norm2 / (env / dc.m1)))
    )


# -- decay fitting and regimes ----------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    c_fit: float
    gamma_fit: float
    window: tuple[float, float]
    rms_residual: float


def fit_decay_rate(
    traj: Trajectory, u_star, window_fraction: float = 0.5, floor: float = 1e-12
) -> DecayFit:
    """Least-squares fit of log(|x - u*| + |y|) ~ log(c) - gamma t over the tail window."""
    if not 0 < window_fraction < 1:
        raise InputError("window_fraction must lie in (0, 1)")
    d = traj.distance_to(u_star)
    keep = np.flatnonzero(d > floor)
    if keep.size == 0:
        raise DegenerateFitError(f"distance below floor {floor:g} on every sample")
    if not d[-1] < d[0]:
        raise PreconditionError("trajectory does not decay: final distance is not below the initial one")
    n_win = int(math.ceil(window_fraction * keep.size))
    idx = keep[-n_win:]
    if idx.size < 3:
        raise DegenerateFitError("fewer than 3 samples above the floor in the fit window")
    t = traj.times[idx]
    logd = np.log(d[idx])
    slope, intercept = np.polyfit(t, logd, 1)
    resid = logd - (slope * t + intercept)
    return DecayFit(
        c_fit=float(math.exp(intercept)),
        gamma_fit=float(-slope),
        window=(float(t[0]), float(t[-1])),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass(frozen=True)
class RegimeReport:
    crossings: int
    classification: str
    converged: bool


def _default_direction(traj: Trajectory, u_star) -> np.ndarray:
    d = traj.xs[0] - np.asarray(u_star)
    if np.linalg.norm(d) == 0:
        d = traj.ys[0].copy()
    if np.linalg.norm(d) == 0:
        d = np.zeros(traj.dimension)
        d[0] = 1.0
    return d


def count_crossings(
    traj: Trajectory, u_star, direction, floor: float = 1e-9, relative_floor: bool = False
) -> int:
    """Strict sign changes of <x - u*, d/|d|>, skipping samples below the floor.

    With ``relative_floor`` the floor scales with |(x - u*, y)| at each sample,
    which makes the count independent of the overall amplitude.
    """
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0 or not np.isfinite(nd):
        raise InputError("probe direction must be nonzero")
    dx = traj.xs - np.asarray(u_star)
    p = dx @ (d / nd)
    if relative_floor:
        thresh = floor * np.sqrt(np.sum(dx**2, axis=1) + np.sum(traj.ys**2, axis=1))
    else:
        thresh = floor
    signs = np.sign(p[np.abs(p) >= thresh])
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _decayed(traj: Trajectory, u_star, ratio: float) -> bool:
    if traj.terminal_event == CONVERGED:
        return True
    if traj.terminal_event == ESCAPED:
        return False
    d = traj.distance_to(u_star)
    half = len(d) // 2
    first, second = float(np.max(d[: max(half, 1)])), float(np.max(d[half:]))
    return first > 0 and second <= ratio * first


def classify_regime(
    traj: Trajectory,
    u_star,
    probe_direction=None,
    floor: float = 1e-9,
    relative_floor: bool = False,
    decay_ratio: float = 0.5,
) -> RegimeReport:
    """Oscillation count and damping regime of a trajectory.

    A trajectory counts as converged when it stopped on a convergence event or
    when the peak of |x - u*| + |y| over its second half is at most
    ``decay_ratio`` times the peak over its first half.
    """
    if len(traj) < 2:
        raise InputError("trajectory needs at least 2 samples")
    direction = _default_direction(traj, u_star) if probe_direction is None else probe_direction
    crossings = count_crossings(traj, u_star, direction, floor, relative_floor)
    converged = _decayed(traj, u_star, decay_ratio)
    if converged:
        label = UNDERDAMPED if crossings >= 2 else NONOSCILLATORY
    else:
        label = OSCILLATORY_NONDECAYING if crossings >= 2 else INCONCLUSIVE
    return RegimeReport(crossings, label, converged)


def find_critical_damping(
    template: SystemConfig,
    ic: State,
    a_range: tuple[float, float],
    tol: float = 1e-2,
    t_max: float = 200.0,
    settings: IntegratorSettings | None = None,
    floor: float = 1e-9,
) -> float:
    """Bisect on the damping for the onset of oscillation (>= 2 crossings).

    Crossings are counted against a floor relative to the phase-space distance
    from equilibrium, and the default settings use a vanishing absolute
    tolerance: near the threshold the oscillating lobes are exponentially small
    and would otherwise be lost below any fixed absolute floor.
    """
    a_lo, a_hi = map(float, a_range)
    if not 0 < a_lo < a_hi:
        raise InputError(f"need 0 < a_lo < a_hi, got {a_range}")
    if not tol > 0:
        raise InputError("tol must be positive")
    settings = settings or IntegratorSettings(rel_tol=1e-8, abs_tol=1e-300, h_min=1e-14)
    u = template.ustar

    def oscillates(a: float) -> bool:
        traj = integrate_adaptive(template.with_damping(a), ic, t_max, settings)
        return count_crossings(traj, u, _default_direction(traj, u), floor, relative_floor=True) >= 2

    lo_osc, hi_osc = oscillates(a_lo), oscillates(a_hi)
    if lo_osc == hi_osc:
        raise BracketError(
            f"oscillation predicate is {lo_osc} at both a={a_lo} and a={a_hi}; no threshold bracketed"
        )
    while a_hi - a_lo > tol:
        mid = 0.5 * (a_lo + a_hi)
        if oscillates(mid) == lo_osc:
            a_lo = mid
        else:
            a_hi = mid
    return 0.5 * (a_lo + a_hi)


# -- basins -----------------------------------------------------------------

@dataclass(frozen=True)
class BasinGrid:
    """Axis-aligned grid over initial states (x_1..x_N, y_1..y_N).

    Cell centres are placed symmetrically about each interval midpoint so that
    a box symmetric about zero yields exactly negated centres.
    """

    intervals: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.intervals) != len(self.counts) or len(self.intervals) % 2:
            raise InputError("basin grid needs one (interval, count) per phase-space axis")
        if any(c < 1 for c in self.counts) or any(hi < lo for lo, hi in self.intervals):
            raise InputError("basin grid counts must be positive and intervals ordered")

    @classmethod
    def from_points(cls, lo, hi, count) -> BasinGrid:
        return cls(tuple((float(a), float(b)) for a, b in zip(lo, hi)), tuple([int(count)] * len(lo)))

    def axis_centres(self, k: int) -> np.ndarray:
        lo, hi = self.intervals[k]
        n = self.counts[k]
        w = (hi - lo) / n
        return 0.5 * (lo + hi) + (np.arange(n) - 0.5 * (n - 1)) * w

    def centres(self) -> np.ndarray:
        axes = [self.axis_centres(k) for k in range(len(self.counts))]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))


@dataclass
class BasinMap:
    grid: BasinGrid | None
    initial_states: np.ndarray
    equilibria: EquilibriumSet
    assignment: list[int | None]  # index into equilibria.points, None = unresolved
    terminal_distance: np.ndarray = field(repr=False)

    def assigned_point(self, i: int) -> np.ndarray | None:
        k = self.assignment[i]
        return None if k is None else self.equilibria.points[k]


BASIN_CHUNK = 64


def _basin_chunk(args):
    s, starts, t_max, settings = args
    return np.array([tr.phase()[-1] for tr in integrate_batch(s, starts, t_max, settings)])


def basin_map(
    s: SystemConfig,
    grid: BasinGrid | Iterable,
    t_max: float,
    conv_tol: float = 1e-2,
    settings: IntegratorSettings | None = None,
    equilibria: EquilibriumSet | None = None,
    equilibria_box=None,
    workers: int | None = None,
) -> BasinMap:
    """Assign each initial state to the classified minimum its orbit settles at.

    ``grid`` is a :class:`BasinGrid` or an explicit iterable of flat initial
    states. All cells are integrated to ``t_max`` together (see
    :func:`integrate_batch`); a cell whose terminal state is not within
    ``conv_tol`` of a minimum, in |x - m| + |y|, stays unresolved.
    """
    if s.a <= 0:
        raise PreconditionError("basins of attraction need damping a > 0")
    settings = settings or IntegratorSettings(rel_tol=1e-8, abs_tol=1e-10)
    n = s.dimension
    if isinstance(grid, BasinGrid):
        if len(grid.counts) != 2 * n:
            raise InputError(f"basin grid has {len(grid.counts)} axes, phase space has {2 * n}")
        starts = grid.centres()
        g = grid
    else:
        starts = np.atleast_2d(np.asarray(list(grid), dtype=float))
        if starts.shape[1] != 2 * n:
            raise InputError(f"initial states must have {2 * n} components")
        g = None
    if equilibria is None:
        if equilibria_box is None:
            r = max(3.0, 2.0 * float(np.max(np.abs(starts[:, :n]))))
            equilibria_box = [(-r, r)] * n
        per_axis = 41 if n == 1 else 11
        equilibria = find_equilibria(s.potential, equilibria_box, grid_per_axis=per_axis, tol=1e-10)
    min_idx = [i for i, c in enumerate(equilibria.classifications) if c == "minimum"]
    if not min_idx:
        raise ConfigurationError("no classified minimum found; cannot build a basin map")
    minima = np.array([equilibria.points[i] for i in min_idx])
    workers = default_workers() if workers is None else max(1, int(workers))
    # fixed chunking keeps results bit-identical for any worker count
    chunks = [starts[i : i + BASIN_CHUNK] for i in range(0, len(starts), BASIN_CHUNK)]
    finals = np.concatenate(_pmap(_basin_chunk, [(s, c, t_max, settings) for c in chunks], workers))
    d = (np.linalg.norm(finals[:, None, :n] - minima[None], axis=2)
         + np.linalg.norm(finals[:, n:], axis=1)[:, None])
    nearest = np.argmin(d, axis=1)
    dist = d[np.arange(len(d)), nearest]
    assignment = [min_idx[k] if dk <= conv_tol else None for k, dk in zip(nearest, dist)]
    return BasinMap(g, starts, equilibria, assignment, dist)


# -- conservative orbits ----------------------------------------------------

@dataclass(frozen=True)
class OrbitReport:
    period: float | None
    return_distance: float


def _refine_min(s, z0, za, zb, h):
    """Minimise |z(t) - z0| over one step using a Hermite interpolant."""
    fa, fb = s.rhs(za), s.rhs(zb)

    def dist(th):
        return float(np.linalg.norm(_hermite(za, fa, zb, fb, h, th) - z0))

    lo, hi = 0.0, 1.0
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = dist(c), dist(d)
    for _ in range(80):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = dist(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = dist(d)
    cands = [(dist(0.0), 0.0), (dist(1.0), 1.0), (min(fc, fd), c if fc < fd else d)]
    best = min(cands)
    return best[1], best[0]


def closed_orbit_check(
    s: SystemConfig, z0: State, t_max: float, tol: float = 1e-6, h: float = 1e-3
) -> OrbitReport:
    """First return of a conservative orbit to its starting point.

    Integrates with leapfrog, waits until the orbit has left the ball of
    radius ``10 * tol`` around ``z0``, then refines each local minimum of the
    sampled distance by interpolation. Reports the refined crossing time as
    the period, or ``period=None`` and the closest approach if none is within
    ``tol`` before ``t_max``.
    """
    if s.a != 0:
        raise PreconditionError("closed orbits are a property of the conservative case a = 0")
    z0f = State(*z0).flat() if not isinstance(z0, State) else z0.flat()
    if np.linalg.norm(s.rhs(z0f)) == 0:
        raise PreconditionError("initial state is an equilibrium")
    traj = integrate_fixed(s, z0, t_max, h, "leapfrog")
    zs = traj.phase()
    dist = np.linalg.norm(zs - z0f, axis=1)
    left = np.flatnonzero(dist > 10 * tol)
    if left.size == 0:
        return OrbitReport(None, float(dist[1:].min()) if len(dist) > 1 else 0.0)
    best = math.inf
    for k in range(left[0] + 1, len(dist) - 1):
        if dist[k] <= dist[k - 1] and dist[k] <= dist[k + 1]:
            for a_i, b_i in ((k - 1, k), (k, k + 1)):
                hh = traj.times[b_i] - traj.times[a_i]
                th, dmin = _refine_min(s, z0f, zs[a_i], zs[b_i], hh)
                best = min(best, dmin)
                if dmin <= tol:
                    return OrbitReport(float(traj.times[a_i] + th * hh), dmin)
    if not math.isfinite(best):
        best = float(dist[left[0]:].min())
    return OrbitReport(None, best)


# -- sweeps -----------------------------------------------------------------

@dataclass
class SweepEntry:
    a: float
    trajectory: Trajectory | None
    regime: RegimeReport | None
    fit: DecayFit | None
    time_to_tolerance: float | None = None
    error: str | None = None


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    uniform_sup: float  # sup over t and over a > 0 of |x - u*| + |y|
    gamma_trend: list[tuple[float, float]]  # (a, gamma_fit), a ascending


def _sweep_one(args):
    s, ic, t_max, settings, window_fraction, tol = args
    u = s.ustar
    try:
        traj = integrate_adaptive(s, ic, t_max, settings)
    except Grad2Error as exc:
        return SweepEntry(s.a, None, None, None, None, f"{type(exc).__name__}: {exc}")
    regime = classify_regime(traj, u)
    fit = None
    if s.a > 0 and regime.converged:
        try:
            fit = fit_decay_rate(traj, u, window_fraction)
        except Grad2Error:
            fit = None
    d = traj.distance_to(u)
    below = np.flatnonzero(d <= tol)
    ttt = float(traj.times[below[0]]) if below.size else None
    return SweepEntry(s.a, traj, regime, fit, ttt)


def damping_sweep(
    template: SystemConfig,
    ic: State,
    a_values: Sequence[float],
    t_max: float,
    settings: IntegratorSettings | None = None,
    window_fraction: float = 0.5,
    tolerance: float = 1e-3,
    workers: int | None = None,
) -> SweepResult:
    """Run one initial condition across several damping values.

    Integration failures are recorded per entry and do not stop the sweep.
    ``time_to_tolerance`` is the first sample time with |x - u*| + |y| below
    ``tolerance``.
    """
    if len(a_values) == 0:
        raise InputError("a_values must be non-empty")
    settings = settings or IntegratorSettings()
    jobs = [(template.with_damping(a), ic, t_max, settings, window_fraction, tolerance) for a in a_values]
    entries = _pmap(_sweep_one, jobs, workers)
    sups = [float(np.max(e.trajectory.distance_to(template.ustar)))
            for e in entries if e.trajectory is not None and e.a > 0]
    trend = sorted((e.a, e.fit.gamma_fit) for e in entries if e.fit is not None)
    return SweepResult(entries, max(sups) if sups else math.nan, trend)
