//! Bound states of `u'' = [l(l+1)/r² + 2m(V − E)] u` by two-sided shooting.
//!
//! The boundary policy enters exactly once, as the outward seed near the
//! origin. The inward solution starts where it has decayed by `e^{-50}` from
//! the match point. Eigenvalues are bracketed by counting: the nodes of both
//! solutions plus the sign of the log-derivative mismatch give the number of
//! eigenvalues below a trial energy.

mod request;
mod shooting;

pub use request::{
    effective_f, origin_seed, EquationForm, GridSpec, LocalExpansion, Seed, SolveRequest,
    SpacingChoice, Tolerances, Validated,
};
pub use shooting::{
    count_in_window, mismatch, near_origin_exponent, scan_mismatch, solve_state, spectrum,
    successive_ratios, Mismatch,
};

use thiserror::Error;

use crate::indicial::{BoundaryPolicy, IndicialError, IndicialResult, Regime};
use crate::numerics::{NumericsError, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("potential `{0}` is strongly singular at the origin; the solver does not treat it")]
    StronglySingular(String),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error("policy `{policy}` admits two near-origin behaviors in regime {regime:?}; choose an SAE mixing angle to resolve the ambiguity")]
    AmbiguousBoundary {
        policy: &'static str,
        regime: Regime,
    },
    #[error("fall to center (discriminant {discriminant}): spectrum unbounded below; supply a short-range cutoff")]
    FallToCenter { discriminant: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("node at match radius {r} persisted after {shifts} shifts")]
    NodeAtMatch { r: f64, shifts: usize },
    #[error("solution overflowed near r = {r}")]
    Overflow { r: f64 },
    #[error("no state with {n_r} nodes in window {window:?}: the window holds node counts {first}..{end}")]
    NotFound {
        n_r: usize,
        window: (f64, f64),
        first: usize,
        end: usize,
    },
    #[error("bisection for the state with {n_r} nodes stopped at [{lo}, {hi}] without converging")]
    NotConverged { n_r: usize, lo: f64, hi: f64 },
}

impl SolveError {
    /// The request was refused on physical grounds rather than failing.
    pub fn is_refusal(&self) -> bool {
        matches!(self, SolveError::FallToCenter { .. })
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, SolveError::NotFound { .. })
    }

    /// Errors in the request itself, as opposed to numerical failures.
    pub fn is_invalid_request(&self) -> bool {
        matches!(
            self,
            SolveError::InvalidRequest(_)
                | SolveError::StronglySingular(_)
                | SolveError::Indicial(_)
                | SolveError::AmbiguousBoundary { .. }
        )
    }
}

/// One bound state. `u` is normalized on the grid; `R = u/r` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstate {
    pub energy: f64,
    pub node_count: usize,
    pub u: Trajectory,
    pub l: u32,
    pub policy: BoundaryPolicy,
    pub indicial: IndicialResult,
    pub seed: Seed,
    /// `∫u² dr` after normalization.
    pub norm_check: f64,
    /// Slope of `ln|u|` against `ln r` over the first grid decade.
    pub near_origin_exponent: Option<f64>,
    /// `W` at the reported energy.
    pub mismatch: f64,
    pub match_radius: f64,
    pub iterations: usize,
}
