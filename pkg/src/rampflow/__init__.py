"""Finite-volume simulation of nonlocal traffic flow with on/off-ramps.

The flux velocity depends on a downstream kernel average of the density and
the on-ramp source on a centered kernel average, so both the solver and the
bundled experiments (offset sweep, perturbation stability, grid
convergence) revolve around discrete kernel convolutions.
"""

__version__ = "0.1.0"

from .diagnostics import (
    MassLedgerReport,
    TheoremConstants,
    functional_J,
    functional_Psi,
    l1_distance,
    mass_ledger,
    phi,
    theorem_constants,
    total_variation,
    tv_bound_violations,
)
from .errors import ConfigurationError, InvariantViolationError
from .experiments import (
    ConvergenceResult,
    PerturbationSpec,
    StabilityReport,
    SweepResult,
    SweepSpec,
    convergence_study,
    delta_sweep,
    lipschitz_envelope_check,
    stability_experiment,
)
from .meshkernel import (
    ConvectiveKernel,
    DiscreteKernelWeights,
    Grid,
    ReactiveKernel,
    build_grid,
    discretize_convective,
    discretize_reactive,
    kernel_l1_distance,
)
from .model import (
    IndicatorField,
    RampConfig,
    RateFunction,
    VelocityLaw,
    discretize_indicator,
    s_off,
    s_on,
    velocity,
)
from .scenario import Scenario, paper_setup_scenario, run_scenario
from .solver import (
    BoundaryRule,
    SolverConfig,
    StateField,
    Trajectory,
    compute_dt,
    nonlocal_sample,
    simulate,
    step,
)

__all__ = [
    "BoundaryRule",
    "ConfigurationError",
    "ConvectiveKernel",
    "ConvergenceResult",
    "DiscreteKernelWeights",
    "Grid",
    "IndicatorField",
    "InvariantViolationError",
    "MassLedgerReport",
    "PerturbationSpec",
    "RampConfig",
    "RateFunction",
    "ReactiveKernel",
    "Scenario",
    "SolverConfig",
    "StabilityReport",
    "StateField",
    "SweepResult",
    "SweepSpec",
    "TheoremConstants",
    "Trajectory",
    "VelocityLaw",
    "build_grid",
    "compute_dt",
    "convergence_study",
    "delta_sweep",
    "discretize_convective",
    "discretize_indicator",
    "discretize_reactive",
    "functional_J",
    "functional_Psi",
    "kernel_l1_distance",
    "l1_distance",
    "lipschitz_envelope_check",
    "mass_ledger",
    "nonlocal_sample",
    "paper_setup_scenario",
    "phi",
    "run_scenario",
    "s_off",
    "s_on",
    "simulate",
    "stability_experiment",
    "step",
    "theorem_constants",
    "total_variation",
    "tv_bound_violations",
    "velocity",
]
