"""Pair-condensate energy functionals on lattices.

Microscopic pair bound states, the effective coupling constants they
generate, the Gross-Pitaevskii limit functional, pair-condensate trial
states on 1D lattices, and the scaling harness that compares the lattice
energy against its low-density expansion.
"""

from .errors import (
    BhfgpError,
    BracketError,
    ConfigurationError,
    GridTooSmallError,
    InconsistentInputError,
    InfeasibleTraceError,
    NoBoundStateError,
    PreconditionError,
    ResolutionError,
    SolverError,
)
from .grids_potentials import (
    Grid,
    PotentialSpec,
    PotentialTerm,
    StabilityReport,
    TrapSpec,
    binding_threshold,
    check_assumption2,
    construct_stable_potential,
    eval_potential,
    eval_trap,
)
from .pairstate import (
    BoundState,
    fourier,
    inverse_fourier,
    self_convolution,
    solve_ground_state,
)
from .coupling import (
    CouplingConstants,
    coupling_total,
    g_bcs,
    g_dir,
    g_ex,
)
from .gp import (
    CondensateState,
    GPEnergyBreakdown,
    GPOptions,
    gp_energy,
    gp_minimize,
)
from .trialstate import (
    AdmissibilityReport,
    TrialState,
    alpha_operator_norm,
    build_trial,
    check_admissibility,
    normalize_for_trace,
    pair_operator_eigenvalues,
    predict_expansion,
    trace_normalizer,
)
from .latticebhf import (
    BHFOptions,
    BHFState,
    DecompositionResult,
    DiagnosticsReport,
    EnergyBreakdown,
    KernelInequalityReport,
    LatticeModel,
    MinimizeResult,
    apriori_diagnostics,
    assemble,
    bhf_energy,
    bhf_gradient,
    decompose_alpha,
    gamma_six_pieces,
    kernel_inequality_check,
    minimize_bhf,
    project_feasible,
)
from .scaling import (
    ScalingConfig,
    ScalingReport,
    ScalingRow,
    scaling_study,
)
from .config import AppConfig, load_config
from .cli import run

__all__ = [
    "BhfgpError",
    "BracketError",
    "ConfigurationError",
    "GridTooSmallError",
    "InconsistentInputError",
    "InfeasibleTraceError",
    "NoBoundStateError",
    "PreconditionError",
    "ResolutionError",
    "SolverError",
    "Grid",
    "PotentialSpec",
    "PotentialTerm",
    "StabilityReport",
    "TrapSpec",
    "binding_threshold",
    "check_assumption2",
    "construct_stable_potential",
    "eval_potential",
    "eval_trap",
    "BoundState",
    "fourier",
    "inverse_fourier",
    "self_convolution",
    "solve_ground_state",
    "CouplingConstants",
    "coupling_total",
    "g_bcs",
    "g_dir",
    "g_ex",
    "CondensateState",
    "GPEnergyBreakdown",
    "GPOptions",
    "gp_energy",
    "gp_minimize",
    "AdmissibilityReport",
    "TrialState",
    "alpha_operator_norm",
    "build_trial",
    "check_admissibility",
    "normalize_for_trace",
    "pair_operator_eigenvalues",
    "predict_expansion",
    "trace_normalizer",
    "BHFOptions",
    "BHFState",
    "DecompositionResult",
    "DiagnosticsReport",
    "EnergyBreakdown",
    "KernelInequalityReport",
    "LatticeModel",
    "MinimizeResult",
    "apriori_diagnostics",
    "assemble",
    "bhf_energy",
    "bhf_gradient",
    "decompose_alpha",
    "gamma_six_pieces",
    "kernel_inequality_check",
    "minimize_bhf",
    "project_feasible",
    "ScalingConfig",
    "ScalingReport",
    "ScalingRow",
    "scaling_study",
    "AppConfig",
    "load_config",
    "run",
]
