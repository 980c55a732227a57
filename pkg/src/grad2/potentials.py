"""Potentials W on R^N and numerical probes of their structural hypotheses.

A potential is an immutable :class:`PotentialSpec`; evaluation dispatches on
its ``kind``. All closed forms accept batched input of shape ``(..., N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, HypothesisViolation, InputError, PreconditionError

__all__ = [
    "KINDS",
    "PotentialSpec",
    "EquilibriumSet",
    "LocalConstants",
    "CoercivityReport",
    "quadratic",
    "double_well",
    "quartic_symmetric",
    "ginzburg_landau",
    "exponential",
    "shifted",
    "from_config",
    "evaluate",
    "gradient",
    "estimate_local_constants",
    "probe_coercivity",
    "find_equilibria",
]


# -- closed forms ------------------------------------------------------------

def _sq(x):
    return np.sum(x * x, axis=-1)


def _quadratic_value(x, k=1.0):
    return 0.5 * k * _sq(x)


def _quadratic_grad(x, k=1.0):
    return k * x


def _double_well_value(x):
    r2 = _sq(x)
    return 0.25 * (r2 - 1.0) ** 2


def _double_well_grad(x):
    return x * (x * x - 1.0)


def _quartic_value(x):
    r2 = _sq(x)
    return r2 * (r2 - 1.0) ** 2


def _quartic_grad(x):
    x2 = x * x
    return 2.0 * x * (x2 - 1.0) * (3.0 * x2 - 1.0)


def _gl_value(x):
    return 0.25 * (_sq(x) - 1.0) ** 2


def _gl_grad(x):
    return (_sq(x) - 1.0)[..., None] * x


def _exp_value(x):
    return 0.5 * np.expm1(_sq(x))


def _exp_grad(x):
    return np.exp(_sq(x))[..., None] * x


# kind -> (value, gradient, allowed params with defaults, fixed dimension or None)
_TABLE: dict[str, tuple[Callable, Callable, dict[str, float], int | None]] = {
    "quadratic": (_quadratic_value, _quadratic_grad, {"k": 1.0}, None),
    "double_well": (_double_well_value, _double_well_grad, {}, 1),
    "quartic_symmetric": (_quartic_value, _quartic_grad, {}, 1),
    "ginzburg_landau": (_gl_value, _gl_grad, {}, None),
    "exponential": (_exp_value, _exp_grad, {}, None),
}

KINDS = tuple(_TABLE) + ("shifted",)

_ALIASES = {
    "doublewell": "double_well",
    "quartic": "quartic_symmetric",
    "gl": "ginzburg_landau",
    "exp": "exponential",
}


@dataclass(frozen=True)
class PotentialSpec:
    """A scalar potential on R^N.

    Use the module-level constructors (:func:`quadratic`, :func:`double_well`,
    ...) or :func:`from_config` rather than building this directly.
    """

    kind: str
    dimension: int = 1
    params: tuple[tuple[str, float], ...] = ()
    inner: PotentialSpec | None = None
    shift: tuple[float, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise ConstructionError(f"dimension must be a positive integer, got {self.dimension!r}")
        if self.kind == "shifted":
            if self.inner is None or self.shift is None:
                raise ConstructionError("shifted potential needs both 'inner' and 'shift'")
            if len(self.shift) != self.inner.dimension or self.dimension != self.inner.dimension:
                raise ConstructionError(
                    f"shift has length {len(self.shift)}, inner potential has dimension "
                    f"{self.inner.dimension}"
                )
            if not all(math.isfinite(s) for s in self.shift):
                raise ConstructionError("shift must be finite")
            return
        if self.kind not in _TABLE:
            raise ConstructionError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        _, _, allowed, fixed_dim = _TABLE[self.kind]
        if fixed_dim is not None and self.dimension != fixed_dim:
            raise ConstructionError(f"{self.kind} is defined only for N={fixed_dim}, got N={self.dimension}")
        for name, val in self.params:
            if name not in allowed:
                raise ConstructionError(f"{self.kind} has no parameter {name!r}")
            if not math.isfinite(val):
                raise ConstructionError(f"parameter {name} must be finite")
        if self.kind == "quadratic" and self.param("k") <= 0:
            raise ConstructionError("quadratic stiffness k must be positive")
        # cached dispatch for the integrators' hot path; not a dataclass field
        value_fn, grad_fn, defaults, _ = _TABLE[self.kind]
        object.__setattr__(self, "_kw", {**defaults, **dict(self.params)})
        object.__setattr__(self, "_fns", (value_fn, grad_fn))

    def param(self, name: str) -> float:
        return dict(self.params).get(name, _TABLE[self.kind][2][name])

    def value(self, x):
        """W(x); ``x`` may carry leading batch axes. No dimension check."""
        x = np.asarray(x, dtype=float)
        if self.kind == "shifted":
            return self.inner.value(x - np.asarray(self.shift))
        return self._fns[0](x, **self._kw)

    def gradient(self, x):
        """Gradient of W at ``x``; same shape as ``x``. No dimension check."""
        x = np.asarray(x, dtype=float)
        if self.kind == "shifted":
            return self.inner.gradient(x - np.asarray(self.shift))
        return self._fns[1](x, **self._kw)

    def known_minimizer(self) -> np.ndarray | None:
        """A global minimizer when one is known in closed form."""
        if self.kind == "shifted":
            m = self.inner.known_minimizer()
            return None if m is None else m + np.asarray(self.shift)
        if self.kind in ("quadratic", "exponential"):
            return np.zeros(self.dimension)
        if self.kind in ("double_well", "quartic_symmetric"):
            return np.ones(1)
        if self.kind == "ginzburg_landau":
            e = np.zeros(self.dimension)
            e[0] = 1.0
            return e
        return None

    def to_config(self) -> dict:
        if self.kind == "shifted":
            return {"kind": "shifted", "inner": self.inner.to_config(), "shift": list(self.shift)}
        cfg: dict = {"kind": self.kind}
        if _TABLE[self.kind][3] is None:
            cfg["dimension"] = self.dimension
        if self.params:
            cfg["params"] = dict(self.params)
        return cfg


def _make(kind: str, dimension: int, **params) -> PotentialSpec:
    return PotentialSpec(kind, dimension, tuple(sorted((k, float(v)) for k, v in params.items())))


def quadratic(dimension: int = 1, k: float | None = None) -> PotentialSpec:
    return _make("quadratic", dimension) if k is None else _make("quadratic", dimension, k=k)


def double_well() -> PotentialSpec:
    return _make("double_well", 1)


def quartic_symmetric() -> PotentialSpec:
    return _make("quartic_symmetric", 1)


def ginzburg_landau(dimension: int = 2) -> PotentialSpec:
    return _make("ginzburg_landau", dimension)


def exponential(dimension: int = 1) -> PotentialSpec:
    return _make("exponential", dimension)


def shifted(inner: PotentialSpec, shift: Sequence[float]) -> PotentialSpec:
    shift = tuple(float(s) for s in np.atleast_1d(np.asarray(shift, dtype=float)))
    return PotentialSpec("shifted", inner.dimension, (), inner, shift)


def from_config(cfg: dict | str, dimension: int | None = None) -> PotentialSpec:
    """Build a potential from ``{"kind": ..., "params": {...}, ...}`` or a bare kind name.

    ``dimension`` is a fallback used when the config does not state one.
    """
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InputError(f"potential config must be a mapping with a 'kind' field, got {cfg!r}")
    kind = str(cfg["kind"]).lower().replace("-", "_")
    kind = _ALIASES.get(kind, kind)
    if kind == "shifted":
        if "inner" not in cfg or "shift" not in cfg:
            raise InputError("shifted potential config needs 'inner' and 'shift'")
        shift = [float(v) for v in cfg["shift"]]
        inner = from_config(cfg["inner"], dimension=len(shift))
        return shifted(inner, shift)
    if kind not in _TABLE:
        raise InputError(f"unknown potential kind {cfg['kind']!r}; expected one of {KINDS}")
    fixed = _TABLE[kind][3]
    dim = cfg.get("dimension", fixed if fixed is not None else (dimension or 1))
    params = cfg.get("params", {}) or {}
    try:
        return _make(kind, int(dim), **{str(k): float(v) for k, v in params.items()})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad parameters for {kind}: {exc}") from exc


# -- checked evaluation ------------------------------------------------------

def _as_point(p: PotentialSpec, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != p.dimension:
        raise InputError(f"point has shape {x.shape}, potential expects ({p.dimension},)")
    return x


def evaluate(p: PotentialSpec, x) -> float:
    return float(p.value(_as_point(p, x)))


def gradient(p: PotentialSpec, x) -> np.ndarray:
    return p.gradient(_as_point(p, x))


# -- hypothesis probes -------------------------------------------------------

@dataclass(frozen=True)
class LocalConstants:
    """Quadratic-control constants of W on a ball around an equilibrium."""

    alpha: float
    beta: float
    mu: float
    radius: float

    def __post_init__(self):
        for name in ("alpha", "beta", "mu", "radius"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InputError(f"{name} must be a positive finite real, got {v!r}")
        if self.alpha > self.beta:
            raise InputError(f"alpha={self.alpha} exceeds beta={self.beta}")


def _unit_directions(n_dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if n_dim == 1:
        return np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
    d = rng.standard_normal((count, n_dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def shell_samples(center, radius: float, count: int, seed: int) -> np.ndarray:
    """Deterministic points on concentric shells inside the closed ball.

    The outermost shell sits exactly at ``radius``.
    """
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    n_shells = max(1, int(round(math.sqrt(count))))
    per_shell = max(2, -(-count // n_shells))
    pts = []
    for j in range(1, n_shells + 1):
        r = radius * j / n_shells
        pts.append(center + r * _unit_directions(center.size, per_shell, rng))
    return np.concatenate(pts)[: max(count, 2)]


def estimate_local_constants(
    p: PotentialSpec,
    u_star,
    radius: float,
    sample_count: int = 400,
    seed: int = 0,
    margin: float = 0.01,
) -> LocalConstants:
    """Sample alpha, beta and mu on the ball of given radius around ``u_star``.

    Raises :class:`HypothesisViolation` if any sampled ratio is not positive.
    """
    u_star = _as_point(p, u_star)
    if not radius > 0:
        raise PreconditionError(f"radius must be positive, got {radius}")
    if sample_count < 1:
        raise PreconditionError("sample_count must be positive")
    g = np.linalg.norm(p.gradient(u_star))
    if g > 1e-8:
        raise PreconditionError(f"u_star is not a critical point: |grad W(u_star)| = {g:.3e}")
    xs = shell_samples(u_star, radius, sample_count, seed)
    d = xs - u_star
    d2 = np.sum(d * d, axis=1)
    w_ratio = p.value(xs) / d2
    g_ratio = np.sum(p.gradient(xs) * d, axis=1) / d2
    if np.any(w_ratio <= 0) or np.any(g_ratio <= 0):
        bad = "W(x)/|x-u*|^2" if np.any(w_ratio <= 0) else "<grad W(x), x-u*>/|x-u*|^2"
        raise HypothesisViolation(
            f"quadratic control fails on the ball of radius {radius} around {u_star.tolist()}: "
            f"sampled {bad} is not positive (min {min(w_ratio.min(), g_ratio.min()):.3e})"
        )
    return LocalConstants(
        alpha=float(w_ratio.min()) * (1 - margin),
        beta=float(w_ratio.max()) * (1 + margin),
        mu=float(g_ratio.min()) * (1 - margin),
        radius=float(radius),
    )


@dataclass(frozen=True)
class CoercivityReport:
    radii: tuple[float, ...]
    minima: tuple[float, ...]
    verdict: str  # "consistent with coercive" | "inconclusive"


def probe_coercivity(
    p: PotentialSpec,
    radii: Sequence[float],
    directions_per_radius: int = 64,
    growth_factor: float = 10.0,
    seed: int = 0,
) -> CoercivityReport:
    """Minimum of W over sampled spheres of growing radius.

    This is evidence, not a proof: the verdict is "consistent with coercive"
    when the minima rise strictly over the last three radii and the final one
    exceeds ``growth_factor`` times the first.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise InputError("radii must be non-empty")
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be positive and strictly ascending")
    rng = np.random.default_rng(seed)
    dirs = _unit_directions(p.dimension, max(2, directions_per_radius), rng)
    if p.dimension > 1:
        eye = np.eye(p.dimension)
        dirs = np.concatenate([eye, -eye, dirs])
    center = np.zeros(p.dimension)
    minima = [float(np.min(p.value(center + r * dirs))) for r in radii]
    tail = minima[-3:]
    rising = all(b > a for a, b in zip(tail, tail[1:]))
    grows = minima[-1] > growth_factor * minima[0] if len(minima) > 1 else False
    verdict = "consistent with coercive" if rising and grows else "inconclusive"
    return CoercivityReport(tuple(radii), tuple(minima), verdict)


@dataclass
class EquilibriumSet:
    points: list[np.ndarray]
    classifications: list[str]  # "minimum" | "saddle-or-maximum" | "unresolved"
    values: list[float] = field(default_factory=list)
    continuum_suspected: bool = False
    notes: list[str] = field(default_factory=list)

    def minima(self) -> list[np.ndarray]:
        return [q for q, c in zip(self.points, self.classifications) if c == "minimum"]

    def __len__(self):
        return len(self.points)


def _fd_hessian(p: PotentialSpec, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        H[:, i] = (p.gradient(x + e) - p.gradient(x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _newton(p: PotentialSpec, x: np.ndarray, tol: float, max_iter: int = 200) -> np.ndarray | None:
    """Damped Newton on grad W = 0 with gradient descent on |grad W|^2 as fallback."""
    g = p.gradient(x)
    gn = float(g @ g)
    for _ in range(max_iter):
        if not np.isfinite(gn):
            return None
        if math.sqrt(gn) <= tol:
            return x
        H = _fd_hessian(p, x)
        step = None
        try:
            if np.linalg.cond(H) < 1e12:
                step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = None
        moved = False
        if step is not None:
            t = 1.0
            for _ in range(30):
                xn = x + t * step
                gn_new = p.gradient(xn)
                v = float(gn_new @ gn_new)
                if v < gn:
                    x, g, gn, moved = xn, gn_new, v, True
                    break
                t *= 0.5
        if not moved:
            # descent direction for 0.5|g|^2 is -H g
            d = -(H @ g)
            dd = float(d @ d)
            if dd == 0.0:
                return x if math.sqrt(gn) <= tol else None
            t = min(1.0, 1.0 / math.sqrt(dd))
            for _ in range(60):
                xn = x + t * d
                gn_new = p.gradient(xn)
                v = float(gn_new @ gn_new)
                if v < gn:
                    x, g, gn, moved = xn, gn_new, v, True
                    break
                t *= 0.5
            if not moved:
                return x if math.sqrt(gn) <= tol else None
    return x if math.sqrt(gn) <= tol else None


def _classify(p: PotentialSpec, q: np.ndarray, rho: float, rng: np.random.Generator) -> str:
    n = q.size
    eye = np.eye(n)
    dirs = np.concatenate([eye, -eye, _unit_directions(n, 8 * n + 8, rng)]) if n > 1 else np.array([[1.0], [-1.0]])
    w0 = float(p.value(q))
    ws = p.value(q + rho * dirs)
    if np.all(ws > w0):
        return "minimum"
    if np.any(ws < w0):
        return "saddle-or-maximum"
    return "unresolved"


def find_equilibria(
    p: PotentialSpec,
    box: Sequence[tuple[float, float]],
    grid_per_axis: int = 21,
    tol: float = 1e-10,
    continuum_count: int = 8,
    probe_radius: float = 1e-3,
    seed: int = 0,
) -> EquilibriumSet:
    """Enumerate critical points of ``p`` seeded from a uniform grid on ``box``.

    Converged points closer than ``10 * tol`` are merged. When more than
    ``continuum_count`` distinct points share one value of W the set is flagged
    as a suspected continuum of equilibria.
    """
    box = [tuple(map(float, b)) for b in box]
    if len(box) != p.dimension:
        raise InputError(f"box has {len(box)} axes, potential has dimension {p.dimension}")
    if any(not hi > lo for lo, hi in box):
        raise InputError("box intervals must be nondegenerate")
    if not tol > 0:
        raise InputError("tol must be positive")
    axes = [np.linspace(lo, hi, grid_per_axis) for lo, hi in box]
    seeds = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.dimension)
    merge_radius = 10.0 * tol
    found: list[np.ndarray] = []
    for s in seeds:
        q = _newton(p, s.copy(), tol)
        if q is None:
            continue
        if found and np.min(np.linalg.norm(np.asarray(found) - q, axis=1)) <= merge_radius:
            continue
        found.append(q)
    # stable order: lexicographic
    found.sort(key=lambda v: tuple(np.round(v, 12)))
    rng = np.random.default_rng(seed)
    result = EquilibriumSet(
        points=found,
        classifications=[_classify(p, q, probe_radius, rng) for q in found],
        values=[float(p.value(q)) for q in found],
    )
    if not found:
        result.notes.append("unresolved: no seed converged")
        return result
    vals = np.array(result.values)
    for v in np.unique(np.round(vals, 9)):
        if np.sum(np.abs(vals - v) <= 1e-9 * max(1.0, abs(v))) > continuum_count:
            result.continuum_suspected = True
            result.notes.append(f"equilibrium continuum suspected at W = {v:.6g}")
    return result
