//! Radial Schrödinger equation laboratory.
//!
//! Potentials are classified by their behavior at the origin, the Frobenius
//! exponents there decide which solutions a boundary policy admits, the
//! shooting eigensolver imposes that policy as its outward seed, and the
//! residual diagnostic measures the point source `−4π u(0)` that a reduced
//! solution hides at `r = 0`.

pub mod eigensolver;
pub mod indicial;
pub mod numerics;
pub mod potential;
pub mod residual;

pub use eigensolver::{
    count_in_window, effective_f, mismatch, near_origin_exponent, origin_seed, scan_mismatch,
    solve_state, spectrum, successive_ratios, Eigenstate, EquationForm, GridSpec, Mismatch, Seed,
    SolveError, SolveRequest, SpacingChoice, Tolerances, Validated,
};
pub use indicial::{
    admissible_behaviors, indicial_exponents, AdmissibilityRule, AdmissibleSet, BoundaryPolicy,
    IndexP, IndicialError, IndicialResult, Regime,
};
pub use numerics::{
    count_nodes, log_derivative, numerov_propagate, Direction, NumericsError, RadialGrid, Spacing,
    Trajectory,
};
pub use potential::{classify, BuiltinKind, Potential, PotentialClass, PotentialError};
pub use residual::{
    audit_eigenstate, check_compatibility, point_source_strength, ResidualError, ResidualReport,
};
