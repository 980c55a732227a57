"""Time stepping for the phase-space system.

Three schemes: classical RK4 (fixed step), the Dormand-Prince 5(4) embedded
pair with step control and cubic Hermite dense output, and Stormer-Verlet
leapfrog for the conservative case a = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import State, SystemConfig
from .errors import InputError, IntegrationOverflow, PreconditionError, StiffnessError

__all__ = [
    "IntegratorSettings",
    "Trajectory",
    "step_rk4",
    "step_leapfrog",
    "integrate_adaptive",
    "integrate_until",
    "integrate_fixed",
    "integrate",
    "integrate_batch",
]

CONVERGED = "converged"
ESCAPED = "escaped"
T_MAX_REACHED = "t_max_reached"


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.1
    sample_stride: float = 0.05

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "h_init", "h_min", "h_max", "sample_stride"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InputError(f"{name} must be a positive finite real, got {v!r}")
        if not self.h_min <= self.h_init <= self.h_max:
            raise InputError(f"need h_min <= h_init <= h_max, got {self.h_min}, {self.h_init}, {self.h_max}")

    def with_(self, **kw) -> IntegratorSettings:
        return replace(self, **kw)


@dataclass
class Trajectory:
    """Sampled solution. ``xs`` and ``ys`` have shape ``(n_samples, N)``."""

    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    method: str
    steps_accepted: int = 0
    steps_rejected: int = 0
    terminal_event: str | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.xs) or self.xs.shape != self.ys.shape:
            raise InputError("times, positions and velocities must have matching lengths")

    def __len__(self):
        return len(self.times)

    @property
    def dimension(self) -> int:
        return self.xs.shape[1]

    @property
    def states(self) -> list[State]:
        return [State(x, y) for x, y in zip(self.xs, self.ys)]

    @property
    def final(self) -> State:
        return State(self.xs[-1].copy(), self.ys[-1].copy())

    @property
    def initial(self) -> State:
        return State(self.xs[0].copy(), self.ys[0].copy())

    def phase(self) -> np.ndarray:
        """Samples as flat phase vectors, shape ``(n_samples, 2N)``."""
        return np.concatenate((self.xs, self.ys), axis=1)

    def distance_to(self, u_star) -> np.ndarray:
        """|x - u*| + |y| per sample."""
        return np.linalg.norm(self.xs - np.asarray(u_star), axis=1) + np.linalg.norm(self.ys, axis=1)


def _finite(z: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(z)):
        raise IntegrationOverflow(f"non-finite state at t = {t:.6g}")


def _as_flat(s: SystemConfig, z) -> np.ndarray:
    if not isinstance(z, State):
        z = State(*z)
    if z.dimension != s.dimension:
        raise InputError(f"state has dimension {z.dimension}, system has dimension {s.dimension}")
    return z.flat()


# -- single steps ------------------------------------------------------------

def _rk4(f: Callable, z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(s: SystemConfig, z: State, h: float) -> State:
    if not h > 0:
        raise InputError(f"step must be positive, got {h}")
    out = _rk4(s.rhs, _as_flat(s, z), h)
    _finite(out, h)
    return State.from_flat(out)


def _leapfrog(s: SystemConfig, x: np.ndarray, y: np.ndarray, g: np.ndarray, h: float):
    """Kick-drift-kick; ``g`` is grad W(x). Returns (x', y', grad W(x'))."""
    y_half = y - 0.5 * h * g
    x_new = x + h * y_half
    g_new = s.potential.gradient(x_new)
    return x_new, y_half - 0.5 * h * g_new, g_new


def step_leapfrog(s: SystemConfig, z: State, h: float) -> State:
    """One Stormer-Verlet step. Negative ``h`` steps backwards (the scheme is symmetric)."""
    if s.a != 0:
        raise PreconditionError("leapfrog requires the conservative case a = 0")
    if h == 0 or not math.isfinite(h):
        raise InputError(f"step must be nonzero and finite, got {h}")
    zf = _as_flat(s, z)
    n = s.dimension
    x, y = zf[:n], zf[n:]
    x1, y1, _ = _leapfrog(s, x, y, s.potential.gradient(x), h)
    out = np.concatenate((x1, y1))
    _finite(out, h)
    return State.from_flat(out)


# -- Dormand-Prince 5(4) -----------------------------------------------------

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


_A_ROWS = tuple(np.array(row) for row in _A)
_B5_ARR = np.array(_B5[:6])
_E_ARR = np.array(_E)


def _dopri_step(f, z, k1, h):
    """Returns (z_new, k7 = f(z_new), error vector)."""
    K = np.empty((7, z.size))
    K[0] = k1
    for i in range(1, 6):
        K[i] = f(z + h * (_A_ROWS[i] @ K[:i]))
    z_new = z + h * (_B5_ARR @ K[:6])
    K[6] = f(z_new)
    return z_new, K[6], h * (_E_ARR @ K)


def _hermite(z0, f0, z1, f1, h, theta):
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return h00 * z0 + (h10 * h) * f0 + h01 * z1 + (h11 * h) * f1


def _sample_times(t_max: float, stride: float) -> np.ndarray:
    ts = np.arange(int(math.floor(t_max / stride + 1e-9)) + 1) * stride
    ts = ts[ts <= t_max * (1 + 1e-12)]
    if t_max - ts[-1] > 1e-9 * max(1.0, t_max):
        return np.append(ts, t_max)
    ts[-1] = t_max
    return ts


def _run_adaptive(
    s: SystemConfig,
    z0: np.ndarray,
    t_max: float,
    settings: IntegratorSettings,
    stop: Callable[[float, np.ndarray], str | None] | None = None,
) -> Trajectory:
    if not (t_max > 0 and math.isfinite(t_max)):
        raise InputError(f"t_max must be a positive finite real, got {t_max}")
    f = s.rhs
    n = s.dimension
    sample_t = _sample_times(t_max, settings.sample_stride)
    out_t = [0.0]
    out_z = [z0.copy()]
    event = None
    if stop is not None:
        event = stop(0.0, z0)
    t = 0.0
    z = z0.copy()
    k1 = f(z)
    _finite(k1, t)
    h = settings.h_init
    accepted = rejected = 0
    next_idx = 1
    rtol, atol = settings.rel_tol, settings.abs_tol
    while event is None and next_idx < len(sample_t) and t < t_max:
        h = min(h, settings.h_max)
        last = t + h >= t_max
        if last:
            h = t_max - t
        z_new, k7, err = _dopri_step(f, z, k1, h)
        scale = atol + rtol * np.maximum(np.abs(z), np.abs(z_new))
        ratio = float(np.max(np.abs(err) / scale))
        if not math.isfinite(ratio):
            _finite(z_new, t + h)
            ratio = math.inf
        if ratio <= 1.0:
            t_new = t_max if last else t + h
            accepted += 1
            while next_idx < len(sample_t) and sample_t[next_idx] <= t_new:
                ts = sample_t[next_idx]
                zs = z_new.copy() if ts == t_new else _hermite(z, k1, z_new, k7, h, (ts - t) / h)
                out_t.append(ts)
                out_z.append(zs)
                next_idx += 1
                if stop is not None:
                    event = stop(ts, zs)
                    if event is not None:
                        break
            t, z, k1 = t_new, z_new, k7
            factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
            h *= factor
        else:
            rejected += 1
            h *= min(1.0, max(0.2, 0.9 * ratio ** -0.2))
            if h < settings.h_min:
                raise StiffnessError(f"step size {h:.3e} below h_min={settings.h_min:.3e} at t = {t:.6g}")
    zs = np.array(out_z)
    return Trajectory(
        np.array(out_t), zs[:, :n], zs[:, n:], "adaptive", accepted, rejected, event or T_MAX_REACHED
    )


def _batch_rhs(s: SystemConfig, Z: np.ndarray) -> np.ndarray:
    n = s.dimension
    out = np.empty_like(Z)
    out[:, :n] = Z[:, n:]
    out[:, n:] = -s.a * Z[:, n:] - s.potential.gradient(Z[:, :n])
    return out


def integrate_batch(
    s: SystemConfig, z0s, t_max: float, settings: IntegratorSettings | None = None
) -> list[Trajectory]:
    """Integrate many initial states at once with the Dormand-Prince pair.

    Every row keeps its own step size and error control, exactly as in
    :func:`integrate_adaptive`; only the arithmetic is vectorised across rows.
    ``z0s`` has shape ``(M, 2N)``.
    """
    settings = settings or IntegratorSettings()
    if not (t_max > 0 and math.isfinite(t_max)):
        raise InputError(f"t_max must be a positive finite real, got {t_max}")
    Z = np.array(z0s, dtype=float, ndmin=2)
    m, width = Z.shape
    if width != 2 * s.dimension:
        raise InputError(f"initial states must have {2 * s.dimension} components, got {width}")
    n = s.dimension
    sample_t = _sample_times(t_max, settings.sample_stride)
    out = np.empty((m, len(sample_t), width))
    out[:, 0] = Z
    nxt = np.ones(m, dtype=int)
    t = np.zeros(m)
    h = np.full(m, settings.h_init)
    K1 = _batch_rhs(s, Z)
    _finite(K1, 0.0)
    acc = np.zeros(m, dtype=int)
    rej = np.zeros(m, dtype=int)
    rtol, atol = settings.rel_tol, settings.abs_tol
    active = np.flatnonzero(nxt < len(sample_t))
    while active.size:
        z, k1, ta = Z[active], K1[active], t[active]
        ha = np.minimum(h[active], settings.h_max)
        last = ta + ha >= t_max
        ha = np.where(last, t_max - ta, ha)
        hc = ha[:, None]
        K = np.empty((7,) + z.shape)
        K[0] = k1
        for i in range(1, 6):
            K[i] = _batch_rhs(s, z + hc * np.tensordot(_A_ROWS[i], K[:i], axes=1))
        z_new = z + hc * np.tensordot(_B5_ARR, K[:6], axes=1)
        K[6] = _batch_rhs(s, z_new)
        err = hc * np.tensordot(_E_ARR, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(z), np.abs(z_new))
        with np.errstate(invalid="ignore", over="ignore"):
            ratio = np.max(np.abs(err) / scale, axis=1)
        ratio = np.where(np.isfinite(ratio), ratio, np.inf)
        ok = ratio <= 1.0
        if np.any(~np.isfinite(z_new[ok])):
            raise IntegrationOverflow("non-finite state in batch integration")
        # accepted rows: emit samples, advance
        ia = active[ok]
        if ia.size:
            t_new = np.where(last[ok], t_max, ta[ok] + ha[ok])
            z0a, f0a, z1a, f1a, hh, t0a = z[ok], k1[ok], z_new[ok], K[6][ok], ha[ok], ta[ok]
            while True:
                pend = nxt[ia] < len(sample_t)
                ts = np.where(pend, sample_t[np.minimum(nxt[ia], len(sample_t) - 1)], np.inf)
                due = ts <= t_new
                if not due.any():
                    break
                rows = np.flatnonzero(due)
                th = ((ts[rows] - t0a[rows]) / hh[rows])[:, None]
                zs = _hermite(z0a[rows], f0a[rows], z1a[rows], f1a[rows], hh[rows][:, None], th)
                exact = ts[rows] == t_new[rows]
                zs[exact] = z1a[rows][exact]
                out[ia[rows], nxt[ia[rows]]] = zs
                nxt[ia[rows]] += 1
            t[ia], Z[ia], K1[ia] = t_new, z1a, f1a
            acc[ia] += 1
            r = ratio[ok]
            with np.errstate(divide="ignore"):
                grow = np.clip(0.9 * r ** -0.2, 0.2, 5.0)
            h[ia] = hh * np.where(r == 0, 5.0, grow)
        ir = active[~ok]
        if ir.size:
            rej[ir] += 1
            with np.errstate(divide="ignore"):
                shrink = np.clip(0.9 * ratio[~ok] ** -0.2, 0.2, 1.0)
            h[ir] = ha[~ok] * shrink
            if np.any(h[ir] < settings.h_min):
                raise StiffnessError(f"step size below h_min={settings.h_min:.3e} in batch integration")
        active = np.flatnonzero((nxt < len(sample_t)) & (t < t_max))
    return [
        Trajectory(sample_t.copy(), out[i, :, :n].copy(), out[i, :, n:].copy(), "adaptive",
                   int(acc[i]), int(rej[i]), T_MAX_REACHED)
        for i in range(m)
    ]


def integrate_adaptive(
    s: SystemConfig, z0: State, t_max: float, settings: IntegratorSettings | None = None
) -> Trajectory:
    """Dormand-Prince 5(4) solution sampled every ``settings.sample_stride``."""
    settings = settings or IntegratorSettings()
    return _run_adaptive(s, _as_flat(s, z0), t_max, settings)


def integrate_until(
    s: SystemConfig,
    z0: State,
    t_max: float,
    settings: IntegratorSettings | None = None,
    conv_tol: float = 1e-3,
    escape_radius: float = 1e6,
    consecutive: int = 3,
) -> Trajectory:
    """Adaptive integration that stops once the orbit settles at ``u_star`` or escapes.

    Converged means ``|x - u*| + |y| <= conv_tol`` on ``consecutive`` output
    samples in a row. Escaped means ``|(x - u*, y)| >= escape_radius``.
    """
    if not conv_tol > 0:
        raise InputError("conv_tol must be positive")
    if not escape_radius > conv_tol:
        raise InputError("escape_radius must exceed conv_tol")
    settings = settings or IntegratorSettings()
    n = s.dimension
    u = s.ustar
    streak = [0]

    def stop(t, z):
        dx = z[:n] - u
        y = z[n:]
        if math.hypot(np.linalg.norm(dx), np.linalg.norm(y)) >= escape_radius:
            return ESCAPED
        if np.linalg.norm(dx) + np.linalg.norm(y) <= conv_tol:
            streak[0] += 1
            if streak[0] >= consecutive:
                return CONVERGED
        else:
            streak[0] = 0
        return None

    return _run_adaptive(s, _as_flat(s, z0), t_max, settings, stop)


def integrate_fixed(
    s: SystemConfig,
    z0: State,
    t_max: float,
    h: float,
    method: str = "rk4",
    sample_stride: float | None = None,
) -> Trajectory:
    """Fixed-step RK4 or leapfrog, sampled every ``sample_stride`` (default: every step).

    Each sampling interval is split into the smallest number of equal substeps
    not longer than ``h``.
    """
    if method not in ("rk4", "leapfrog"):
        raise InputError(f"unknown fixed-step method {method!r}")
    if method == "leapfrog" and s.a != 0:
        raise PreconditionError("leapfrog requires the conservative case a = 0")
    if not (h > 0 and math.isfinite(h)):
        raise InputError(f"step must be a positive finite real, got {h}")
    if not (t_max > 0 and math.isfinite(t_max)):
        raise InputError(f"t_max must be a positive finite real, got {t_max}")
    stride = h if sample_stride is None else sample_stride
    if not stride > 0:
        raise InputError("sample_stride must be positive")
    sample_t = _sample_times(t_max, stride)
    n = s.dimension
    z = _as_flat(s, z0)
    out = np.empty((len(sample_t), 2 * n))
    out[0] = z
    steps = 0
    x, y = z[:n].copy(), z[n:].copy()
    g = s.potential.gradient(x)
    for i in range(1, len(sample_t)):
        span = sample_t[i] - sample_t[i - 1]
        m = max(1, int(math.ceil(span / h - 1e-9)))
        hh = span / m
        if method == "rk4":
            for _ in range(m):
                z = _rk4(s.rhs, z, hh)
            _finite(z, sample_t[i])
            out[i] = z
        else:
            for _ in range(m):
                x, y, g = _leapfrog(s, x, y, g, hh)
            out[i, :n] = x
            out[i, n:] = y
            _finite(out[i], sample_t[i])
        steps += m
    return Trajectory(sample_t, out[:, :n], out[:, n:], method, steps, 0, T_MAX_REACHED)


def integrate(
    s: SystemConfig,
    z0: State,
    t_max: float,
    settings: IntegratorSettings | None = None,
    method: str = "adaptive",
    h: float = 1e-3,
) -> Trajectory:
    """Dispatch on ``method`` in {adaptive, rk4, leapfrog}."""
    settings = settings or IntegratorSettings()
    if method == "adaptive":
        return integrate_adaptive(s, z0, t_max, settings)
    return integrate_fixed(s, z0, t_max, h, method, settings.sample_stride)
