//! Radial grids and Numerov propagation for `u'' = f(r) u`.
//!
//! Linear grids are propagated directly. Logarithmic grids are propagated in
//! `x = ln r` after the change of variables `u = √r φ`, which turns the
//! equation into `φ'' = (r² f + ¼) φ` with a uniform step in `x`.

mod grid;
mod numerov;

pub use grid::{RadialGrid, Spacing, MIN_POINTS};
pub use numerov::{
    count_nodes, log_derivative, numerov_propagate, propagate_between, propagate_natural,
    propagate_with_jumps, Direction, Trajectory, OVERFLOW_GUARD,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("grid needs at least 16 points, got {0}")]
    TooFewPoints(usize),
    #[error("grid extent must satisfy 0 < r_min < r_max < inf, got [{r_min}, {r_max}]")]
    BadExtent { r_min: f64, r_max: f64 },
    #[error("grid nodes must be strictly increasing")]
    NotIncreasing,
    #[error("Numerov propagation needs a uniform (linear or logarithmic) grid")]
    NonUniformGrid,
    #[error("coefficient f is not finite at node {index} (r = {r})")]
    NonFiniteCoefficient { index: usize, r: f64 },
    #[error("step too coarse for Numerov at node {index} (r = {r}): h^2 f / 12 = {t} >= 1")]
    StepTooCoarse { index: usize, r: f64, t: f64 },
    #[error("propagation range {start}..{stop} is invalid for a grid of {len} nodes")]
    BadRange {
        start: usize,
        stop: usize,
        len: usize,
    },
    #[error("radius {r} is outside the resolved span [{lo}, {hi}] of the trajectory")]
    OutsideSpan { r: f64, lo: f64, hi: f64 },
    #[error("node at matching point r = {r}: u vanishes there; shift the match radius")]
    NodeAtMatch { r: f64 },
}
