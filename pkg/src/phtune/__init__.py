"""Gain tuning for PID passivity-based control of mechanical systems.

The package linearizes the velocity-feedback PID closed loop around a rest
target, rewrites the drift matrix as a saddle-point matrix, and turns its
spectral bounds into constructive tuning rules: remove overshoot, prescribe a
damping-ratio band, or cap the 98% rise time.  A fixed-step nonlinear
simulator validates the synthesized gains on the original plant.
"""

from .benchmarks import TWO_DOF_TARGET, two_dof_gain_sets
from .errors import (
    AssumptionViolation,
    InfeasibleTuning,
    PhtuneError,
    SimulationDiverged,
    UnassignableEquilibrium,
)
from .model import (
    Equilibrium,
    MechanicalModel,
    assign_equilibrium,
    builtin_manipulator,
    builtin_pendulum,
    left_annihilator,
    linear_model,
)
from .saddleform import (
    Gains,
    SaddleForm,
    build_rpw,
    build_saddle_matrix,
    cholesky_factors,
    hessian_hd,
    linearize_closed_loop,
    make_saddle_form,
    upsilon_star,
)
from .sim import (
    Trajectory,
    TransientMetrics,
    closed_loop_field,
    control_input,
    shaped_energy,
    simulate_linear,
    simulate_nonlinear,
    transient_metrics,
)
from .spectral import (
    EigenvalueBounds,
    NoOvershootResult,
    RiseTimeBound,
    Scenario,
    SpectralReport,
    classify_scenario,
    damping_ratio,
    eigen_saddle,
    eigenvalue_bounds,
    no_overshoot_check,
    reality_test,
    rise_time_bound,
    spectral_report,
    zeta_bounds,
)
from .tuning import (
    Mode,
    TuningResult,
    TuningTarget,
    tune_damping_band,
    tune_no_overshoot,
    tune_rise_time,
    verify_gains,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "EigenvalueBounds",
    "Equilibrium",
    "Gains",
    "InfeasibleTuning",
    "MechanicalModel",
    "Mode",
    "NoOvershootResult",
    "PhtuneError",
    "RiseTimeBound",
    "SaddleForm",
    "Scenario",
    "SimulationDiverged",
    "SpectralReport",
    "TWO_DOF_TARGET",
    "Trajectory",
    "TransientMetrics",
    "TuningResult",
    "TuningTarget",
    "UnassignableEquilibrium",
    "assign_equilibrium",
    "build_rpw",
    "build_saddle_matrix",
    "builtin_manipulator",
    "builtin_pendulum",
    "cholesky_factors",
    "classify_scenario",
    "closed_loop_field",
    "control_input",
    "damping_ratio",
    "eigen_saddle",
    "eigenvalue_bounds",
    "hessian_hd",
    "left_annihilator",
    "linear_model",
    "linearize_closed_loop",
    "make_saddle_form",
    "no_overshoot_check",
    "reality_test",
    "rise_time_bound",
    "shaped_energy",
    "simulate_linear",
    "simulate_nonlinear",
    "spectral_report",
    "transient_metrics",
    "tune_damping_band",
    "tune_no_overshoot",
    "tune_rise_time",
    "two_dof_gain_sets",
    "upsilon_star",
    "verify_gains",
    "zeta_bounds",
]
