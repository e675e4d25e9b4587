"""Spectral-Galerkin simulator and verification toolkit for the damped
heat flow constrained to the unit L2 sphere."""

from .domain import (
    DomainSpec,
    Field,
    Mode,
    NormRecord,
    SpectralBasis,
    analyze,
    build_basis,
    load_field,
    norms,
    save_field,
    synthesize,
)
from .flow import (
    EnergyLedger,
    FlowBlowUp,
    FlowConfig,
    FlowResult,
    FlowState,
    dissipation_residual,
    galerkin_rhs,
    init_state,
    run_flow,
    step,
)
from .ground_state import (
    CrossValidationReport,
    GroundStateError,
    GroundStateResult,
    cross_validate,
    lambda_search,
    linear_ground_state,
    solve_by_flow,
    stationary_residual,
    sub_super_solve,
)
from .operators import (
    CutoffSpec,
    OperatorParams,
    constrained_rhs,
    cutoff_symbol,
    dyadic_project,
    energy,
    grad_energy,
    multiplier_functional,
    nonlinearity,
    power_law,
    quintic_smoothstep,
    smooth_project,
    tangent_gradient,
    tangent_project,
)

__version__ = "0.1.0"
