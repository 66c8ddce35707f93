//! Pseudospectral library for solitary waves of fractional dispersive
//! equations on a periodic box.
//!
//! The crate provides grids and fields with cached spectra, Fourier
//! multiplier operators, a catalog of nonlinear potentials, conserved
//! functionals, structure-preserving time integrators for the real
//! unidirectional family and the complex dispersive family, ground-state
//! solvers (constrained gradient descent and the fixed-point power method),
//! and analysis tools for orbital stability and energy-per-charge scans.

pub mod analysis;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod nonlinearity;
pub mod evolution;
pub mod par;
pub mod report;
pub mod soliton;
pub mod spectral;

pub use analysis::{
    bump_profile, gn_exponents, hylomorphy_scan, orbital_stability_experiment,
    translation_distance, GnExponents, HylomorphyReport, Perturbation, StabilityError,
    StabilityOptions, StabilityReport,
};
pub use error::{CoreError, Result};
pub use field::{Field, FieldKind};
pub use functionals::{
    charge_fkdv, charge_fns, charge_gradient, energy, energy_gradient, functional_report,
    hylenic_ratio, nonlinear_energy, tail_mass, ChargeConvention, FunctionalReport,
};
pub use evolution::{
    dt_advisory, run, step_fkdv, step_fns, weak_residual, EvolutionConfig, EvolutionTrace,
    EvolveError, Family, FkdvStepper, FnsStepper,
};
pub use grid::{make_grid, Grid};
pub use report::{
    gn_table_from_text, gn_table_to_text, hylomorphy_from_text, hylomorphy_to_text,
    snapshot_from_text, snapshot_to_text, solution_from_text, solution_to_text,
    stability_from_text, stability_to_text, trace_from_text, trace_to_text, SolutionRecord,
    TraceRecord,
};
pub use soliton::{
    bo_ground_state, estimate_multiplier, exact_bo_soliton, find_soliton_gradient_flow,
    localization_ratio, petviashvili, stationary_residual, GradientFlowOptions,
    PetviashviliOptions, SolitonSolution, SolveError, SolveMethod, LOCALIZATION_THRESHOLD,
};
pub use nonlinearity::{
    quadratic_shift_fkdv, quadratic_shift_fns, FkdvQuadraticShift, FnsQuadraticShift, Nonlinearity,
};
pub use spectral::{
    dealias, dealias_spectrum, derivative_x, fractional_derivative, hilbert_derivative,
    hilbert_transform, sobolev_seminorm,
};
