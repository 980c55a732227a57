"""The damped gradient system u'' + a u' + grad W(u) = 0 in phase-space form.

States are pairs (x, y) = (position, velocity). Everything here is a pure
function of an immutable :class:`SystemConfig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, InputError, PreconditionError
from .potentials import LocalConstants, PotentialSpec

__all__ = [
    "State",
    "SystemConfig",
    "DecayConstants",
    "vector_field",
    "energy",
    "lyapunov",
    "lyapunov_expanded",
    "lyapunov_dissipation",
    "energy_dissipation",
    "decay_constants",
    "absorbing_radius",
]


@dataclass(frozen=True)
class State:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or x.shape != y.shape:
            raise InputError(f"position {x.shape} and velocity {y.shape} must be equal-length vectors")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dimension(self) -> int:
        return self.x.size

    def flat(self) -> np.ndarray:
        return np.concatenate((self.x, self.y))

    @classmethod
    def from_flat(cls, z) -> State:
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n].copy(), z[n:].copy())

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash((self.x.tobytes(), self.y.tobytes()))


@dataclass(frozen=True)
class SystemConfig:
    """Potential, damping ``a >= 0`` and the reference equilibrium ``u_star``."""

    potential: PotentialSpec
    a: float
    u_star: tuple[float, ...] | None = None
    equilibrium_tol: float = field(default=1e-8, repr=False)

    def __post_init__(self):
        a = float(self.a)
        if not math.isfinite(a) or a < 0:
            raise ConstructionError(f"damping a must be a finite nonnegative real, got {self.a!r}")
        object.__setattr__(self, "a", a)
        n = self.potential.dimension
        if self.u_star is None:
            u = (0.0,) * n
        else:
            u = tuple(float(v) for v in np.atleast_1d(np.asarray(self.u_star, dtype=float)))
        if len(u) != n:
            raise ConstructionError(f"u_star has length {len(u)}, potential has dimension {n}")
        object.__setattr__(self, "u_star", u)
        g = float(np.linalg.norm(self.potential.gradient(np.array(u))))
        if not g <= self.equilibrium_tol:
            raise ConstructionError(f"u_star={list(u)} is not an equilibrium: |grad W| = {g:.3e}")

    @property
    def dimension(self) -> int:
        return self.potential.dimension

    @property
    def ustar(self) -> np.ndarray:
        return np.array(self.u_star)

    def with_damping(self, a: float) -> SystemConfig:
        return SystemConfig(self.potential, a, self.u_star, self.equilibrium_tol)

    def rhs(self, z: np.ndarray) -> np.ndarray:
        """Vector field on a flat state ``[x, y]``; unchecked fast path."""
        n = self.potential.dimension
        out = np.empty_like(z)
        out[:n] = z[n:]
        out[n:] = -self.a * z[n:] - self.potential.gradient(z[:n])
        return out

    def equilibrium_state(self) -> State:
        return State(self.ustar, np.zeros(self.dimension))


def _check(s: SystemConfig, z: State) -> State:
    if not isinstance(z, State):
        z = State(*z)
    if z.dimension != s.dimension:
        raise InputError(f"state has dimension {z.dimension}, system has dimension {s.dimension}")
    return z


def vector_field(s: SystemConfig, z: State) -> State:
    z = _check(s, z)
    return State(z.y.copy(), -s.a * z.y - s.potential.gradient(z.x))


def energy(s: SystemConfig, z: State) -> float:
    z = _check(s, z)
    return float(0.5 * z.y @ z.y + s.potential.value(z.x))


def lyapunov(s: SystemConfig, z: State) -> float:
    """V_a = |y|^2/2 + 2 W(x) + |y + a (x - u*)|^2 / 2."""
    z = _check(s, z)
    w = z.y + s.a * (z.x - s.ustar)
    return float(0.5 * z.y @ z.y + 2.0 * s.potential.value(z.x) + 0.5 * w @ w)


def lyapunov_expanded(s: SystemConfig, z: State) -> float:
    """Same functional written as |y|^2 + 2W + a<x-u*, y> + a^2|x-u*|^2/2."""
    z = _check(s, z)
    d = z.x - s.ustar
    return float(z.y @ z.y + 2.0 * s.potential.value(z.x) + s.a * (d @ z.y) + 0.5 * s.a**2 * (d @ d))


def lyapunov_dissipation(s: SystemConfig, z: State) -> float:
    """Rate of change of V_a along the flow: -a|y|^2 - a<grad W(x), x - u*>."""
    z = _check(s, z)
    d = z.x - s.ustar
    return float(-s.a * (z.y @ z.y) - s.a * (s.potential.gradient(z.x) @ d))


def energy_dissipation(s: SystemConfig, z: State) -> float:
    """Rate of change of E along the flow: -a|y|^2."""
    z = _check(s, z)
    return float(-s.a * (z.y @ z.y))


def energy_series(s: SystemConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """E over a batch of samples, shapes ``(n, N)``."""
    return 0.5 * np.sum(ys * ys, axis=1) + s.potential.value(xs)


def lyapunov_series(s: SystemConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """V_a over a batch of samples, shapes ``(n, N)``."""
    w = ys + s.a * (xs - s.ustar)
    return 0.5 * np.sum(ys * ys, axis=1) + 2.0 * s.potential.value(xs) + 0.5 * np.sum(w * w, axis=1)


@dataclass(frozen=True)
class DecayConstants:
    m1: float
    m2: float
    gamma: float


def decay_constants(s: SystemConfig, lc: LocalConstants) -> DecayConstants:
    """Norm-equivalence constants m1, m2(a) and the certified rate gamma(a)."""
    if s.a <= 0:
        raise PreconditionError("conservative case has no decay rate (gamma(a) -> 0 as a -> 0+)")
    m1 = min(0.5, 2.0 * lc.alpha)
    m2 = max(1.5, 2.0 * lc.beta + s.a**2)
    return DecayConstants(m1=m1, m2=m2, gamma=s.a * min(1.0, lc.mu) / m2)


def absorbing_radius(
    s: SystemConfig,
    energy_bound: float,
    sublevel_probe_box,
    grid_per_axis: int = 201,
    slack: float = 1e-12,
) -> float:
    """Radius R of a phase-space ball that traps every orbit with E(z0) <= energy_bound.

    Computes C_B = sup{|x|^2 : W(x) <= energy_bound} by a grid scan over the
    probe box, refined by bisection across the sublevel boundary, and returns
    sqrt(C_B + 2 * energy_bound).
    """
    if s.a <= 0:
        raise PreconditionError("absorbing radius is stated for the damped case a > 0")
    box = [tuple(map(float, b)) for b in sublevel_probe_box]
    n = s.dimension
    if len(box) != n or any(not hi > lo for lo, hi in box):
        raise InputError(f"probe box must have {n} nondegenerate intervals")
    level = float(energy_bound) + slack * max(1.0, abs(float(energy_bound)))
    pot = s.potential
    axes = [np.linspace(lo, hi, grid_per_axis) for lo, hi in box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    inside = pot.value(grid) <= level
    if not inside.any():
        raise PreconditionError(f"no probe point satisfies W(x) <= {energy_bound}; energy bound below inf W?")
    for ax in range(n):
        if inside.take(0, axis=ax).any() or inside.take(-1, axis=ax).any():
            raise InputError("probe box too small: sublevel set reaches the box boundary")
    best = float(np.max(np.sum(grid[inside] ** 2, axis=-1)))
    # refine along each axis where a sublevel point neighbours an exterior one
    for ax in range(n):
        for direction in (1, -1):
            shifted_inside = np.roll(inside, -direction, axis=ax)
            edge = inside & ~shifted_inside
            idx = np.argwhere(edge)
            for i in idx:
                lo_pt = grid[tuple(i)]
                j = i.copy()
                j[ax] += direction
                hi_pt = grid[tuple(j)]
                for _ in range(60):
                    mid = 0.5 * (lo_pt + hi_pt)
                    if pot.value(mid) <= level:
                        lo_pt = mid
                    else:
                        hi_pt = mid
                best = max(best, float(lo_pt @ lo_pt))
    return math.sqrt(best + 2.0 * float(energy_bound))
