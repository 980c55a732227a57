"""Damped second-order gradient systems: simulation and stability verification."""

from .analysis import (
    basin_map,
    classify_regime,
    closed_orbit_check,
    damping_sweep,
    find_critical_damping,
    fit_decay_rate,
    verify_energy_dissipation,
    verify_exponential_bound,
    verify_lyapunov_monotonicity,
)
from .dynamics import (
    DecayConstants,
    State,
    SystemConfig,
    absorbing_radius,
    decay_constants,
    energy,
    lyapunov,
    lyapunov_dissipation,
    vector_field,
)
from .integrators import (
    IntegratorSettings,
    Trajectory,
    integrate,
    integrate_adaptive,
    integrate_fixed,
    integrate_until,
    step_leapfrog,
    step_rk4,
)
from .potentials import (
    LocalConstants,
    PotentialSpec,
    double_well,
    estimate_local_constants,
    evaluate,
    exponential,
    find_equilibria,
    from_config,
    ginzburg_landau,
    gradient,
    probe_coercivity,
    quadratic,
    quartic_symmetric,
    shifted,
)

from .svg import render_phase_svg

__version__ = "0.1.0"
