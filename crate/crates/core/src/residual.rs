//! Point-source strength hidden at the origin of a reduced solution.
//!
//! For `ψ = u/r` the outward flux of `∇ψ` through a sphere of radius `a` is
//! `s(a) = 4π (a u'(a) − u(a))`. Its `a → 0` limit is the coefficient of
//! `δ³(r)` in `Δψ`, namely `−4π u(0)`. A reduced solution is compatible with
//! the full three-dimensional equation exactly when that limit vanishes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigensolver::Eigenstate;
use crate::numerics::Trajectory;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("need at least 3 probe radii to extrapolate, got {0}")]
    TooFewRadii(usize),
    #[error("probe radii must be positive and strictly decreasing")]
    BadRadii,
    #[error("u or u' is not finite at probe radius {0}")]
    NonFinite(f64),
    #[error("grid too coarse near origin: minimum resolved radius is {min_resolved}, leaving {probes} probe radii")]
    GridTooCoarse { min_resolved: f64, probes: usize },
}

/// Something that can report `u(r)` and `u'(r)`.
pub trait RadialProbe {
    fn value_and_derivative(&self, r: f64) -> (f64, f64);
}

/// `u` and `u'` given as closures.
pub struct Analytic<F, G> {
    pub u: F,
    pub du: G,
}

impl<F, G> Analytic<F, G>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    pub fn new(u: F, du: G) -> Self {
        Self { u, du }
    }
}

impl<F, G> RadialProbe for Analytic<F, G>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        ((self.u)(r), (self.du)(r))
    }
}

/// `Σ cₖ r^{aₖ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>,
}

impl PowerSum {
    pub fn power(exponent: f64) -> Self {
        Self {
            terms: vec![(1.0, exponent)],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![(c, 0.0)],
        }
    }

    pub fn plus(mut self, coefficient: f64, exponent: f64) -> Self {
        self.terms.push((coefficient, exponent));
        self
    }
}

impl RadialProbe for PowerSum {
    fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(u, du), &(c, a)| {
            let d = if a == 0.0 {
                0.0
            } else {
                c * a * r.powf(a - 1.0)
            };
            (u + c * r.powf(a), du + d)
        })
    }
}

impl RadialProbe for Trajectory {
    fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        Trajectory::value_and_derivative(self, r).unwrap_or((f64::NAN, f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub radii: Vec<f64>,
    pub flux_values: Vec<f64>,
    /// `None` when the flux diverges as `a → 0`.
    pub extrapolated_strength: Option<f64>,
    /// Exponent `q` of the leading correction `c a^q` over the three smallest radii.
    pub fitted_exponent: Option<f64>,
    pub divergent: bool,
    pub tolerance: f64,
    pub compatible: bool,
}

/// `s(a) = 4π (a u'(a) − u(a))`.
pub fn flux(u: f64, du: f64, a: f64) -> f64 {
    4.0 * PI * (a * du - u)
}

/// Geometric probe radii `0.1 · 2^{−k}`, `k = 0..=12`.
pub fn default_radii() -> Vec<f64> {
    (0..=12).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

pub fn point_source_strength<P: RadialProbe + ?Sized>(
    u: &P,
    radii: &[f64],
) -> Result<ResidualReport, ResidualError> {
    point_source_report(u, radii, DEFAULT_TOLERANCE)
}

pub fn check_compatibility<P: RadialProbe + ?Sized>(
    u: &P,
    radii: &[f64],
    tol: f64,
) -> Result<bool, ResidualError> {
    point_source_report(u, radii, tol).map(|r| r.compatible)
}

pub fn point_source_report<P: RadialProbe + ?Sized>(
    u: &P,
    radii: &[f64],
    tol: f64,
) -> Result<ResidualReport, ResidualError> {
    if radii.len() < 3 {
        return Err(ResidualError::TooFewRadii(radii.len()));
    }
    if radii.iter().any(|a| !(*a > 0.0 && a.is_finite())) || radii.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(ResidualError::BadRadii);
    }
    let flux_values = radii
        .iter()
        .map(|&a| {
            let (v, dv) = u.value_and_derivative(a);
            let s = flux(v, dv, a);
            if s.is_finite() {
                Ok(s)
            } else {
                Err(ResidualError::NonFinite(a))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = radii.len();
    let tail_r = &radii[n - 3..];
    let tail_s = &flux_values[n - 3..];
    let fitted = fit_power_limit(tail_r, tail_s);
    let fitted_exponent = fitted.as_ref().and_then(|f| f.exponent);
    let divergent = is_divergent(tail_s, fitted_exponent);
    let extrapolated_strength = if divergent {
        None
    } else {
        Some(extrapolate(radii, &flux_values))
    };
    let compatible = extrapolated_strength.is_some_and(|s| s.abs() < tol);
    Ok(ResidualReport {
        radii: radii.to_vec(),
        flux_values,
        extrapolated_strength,
        fitted_exponent,
        divergent,
        tolerance: tol,
        compatible,
    })
}

/// Runs the diagnostic on a solved state, probing only where the grid
/// resolves `u` and `u'`.
pub fn audit_eigenstate(state: &Eigenstate) -> Result<ResidualReport, ResidualError> {
    audit_trajectory(&state.u, DEFAULT_TOLERANCE)
}

pub fn audit_trajectory(u: &Trajectory, tol: f64) -> Result<ResidualReport, ResidualError> {
    let min_resolved = u.min_resolved_radius();
    let max_resolved = u.max_resolved_radius();
    let radii: Vec<f64> = default_radii()
        .into_iter()
        .filter(|&a| a >= min_resolved && a <= max_resolved)
        .collect();
    let below_largest = radii
        .first()
        .map(|&a| u.grid().nodes().partition_point(|&r| r < a))
        .unwrap_or(0);
    if radii.len() < 3 || below_largest < 10 {
        return Err(ResidualError::GridTooCoarse {
            min_resolved,
            probes: radii.len(),
        });
    }
    point_source_report(u, &radii, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerFit {
    limit: f64,
    /// `None` when the three values already agree to rounding.
    exponent: Option<f64>,
}

/// Fits `s = s₀ + c a^q` through three points with decreasing radii.
fn fit_power_limit(radii: &[f64], values: &[f64]) -> Option<PowerFit> {
    let (a1, a2, a3) = (radii[0], radii[1], radii[2]);
    let (s1, s2, s3) = (values[0], values[1], values[2]);
    let scale = s1.abs().max(s2.abs()).max(s3.abs());
    let d1 = s1 - s2;
    let d2 = s2 - s3;
    if d2.abs() <= 1e-14 * scale || scale == 0.0 {
        return Some(PowerFit {
            limit: s3,
            exponent: None,
        });
    }
    if d1 * d2 <= 0.0 {
        return None;
    }
    let target = (d1 / d2).ln();
    let l12 = (a1 / a2).ln();
    let l23 = (a2 / a3).ln();
    // ln R(q), R(q) = (a1^q − a2^q) / (a2^q − a3^q), increasing in q
    let ln_ratio = |q: f64| -> f64 {
        if q == 0.0 {
            (l12 / l23).ln()
        } else {
            q * l23 + ((q * l12).exp_m1() / (q * l23).exp_m1()).ln()
        }
    };
    let (mut lo, mut hi) = (-30.0, 30.0);
    if !(ln_ratio(lo) <= target && target <= ln_ratio(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let limit = if q.abs() < 1e-300 {
        f64::NAN
    } else {
        s3 - d2 / (q * l23).exp_m1()
    };
    Some(PowerFit {
        limit,
        exponent: Some(q),
    })
}

/// `|s|` grows monotonically over the three smallest radii, either by more
/// than 2× or with a non-positive fitted exponent.
fn is_divergent(tail: &[f64], exponent: Option<f64>) -> bool {
    let m: Vec<f64> = tail.iter().map(|s| s.abs()).collect();
    let growing = m[1] > m[0] && m[2] > m[1] && (m[2] - m[1]) > 1e-12 * m[2];
    growing && (m[2] > 2.0 * m[0] || exponent.is_some_and(|q| q <= 0.0))
}

/// Repeated three-point power-law extrapolation: one pass over consecutive
/// triples, then a second pass on those estimates when at least three exist.
fn extrapolate(radii: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    let last = values[n - 1];
    let scale = values.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let first_pass: Vec<(f64, f64)> = (0..n - 2)
        .filter_map(|k| {
            fit_power_limit(&radii[k..k + 3], &values[k..k + 3])
                .filter(|f| f.limit.is_finite() && f.exponent.is_none_or(|q| q > 0.0))
                .map(|f| (radii[k + 2], f.limit))
        })
        .collect();
    let Some(&(_, best)) = first_pass.last() else {
        return last;
    };
    if first_pass.len() < 3 {
        return best;
    }
    let m = first_pass.len();
    let tail = &first_pass[m - 3..];
    let spread = tail
        .iter()
        .map(|&(_, s)| (s - best).abs())
        .fold(0.0, f64::max);
    if spread <= 1e-12 * scale {
        return best;
    }
    let r: Vec<f64> = tail.iter().map(|&(a, _)| a).collect();
    let s: Vec<f64> = tail.iter().map(|&(_, s)| s).collect();
    match fit_power_limit(&r, &s) {
        Some(f) if f.limit.is_finite() && f.exponent.is_none_or(|q| q > 0.0) => f.limit,
        _ => best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RadialGrid;

    /// Flux of ∇(u/r) through the sphere |x| = a by midpoint quadrature over
    /// (θ, φ), using only the radial derivative of ψ = u/r.
    fn sphere_flux(u: impl Fn(f64) -> f64, a: f64) -> f64 {
        let dpsi = |r: f64| {
            let h = 1e-6 * r;
            (u(r + h) / (r + h) - u(r - h) / (r - h)) / (2.0 * h)
        };
        let (nt, np) = (200, 64);
        let mut total = 0.0;
        for i in 0..nt {
            let theta = (i as f64 + 0.5) * PI / nt as f64;
            for _ in 0..np {
                total += dpsi(a) * a * a * theta.sin() * (PI / nt as f64) * (2.0 * PI / np as f64);
            }
        }
        total
    }

    #[test]
    fn constant_gives_minus_four_pi() {
        let rep = point_source_strength(&PowerSum::constant(1.0), &default_radii()).unwrap();
        assert!((rep.extrapolated_strength.unwrap() + 4.0 * PI).abs() < 1e-12);
        assert!(!rep.compatible);
        assert!(!rep.divergent);
    }

    #[test]
    fn linear_and_fractional_powers_vanish() {
        let rep = point_source_strength(&PowerSum::power(1.0), &default_radii()).unwrap();
        assert!(rep.flux_values.iter().all(|&s| s == 0.0));
        assert_eq!(rep.extrapolated_strength, Some(0.0));
        let rep = point_source_strength(&PowerSum::power(0.6), &default_radii()).unwrap();
        for (&a, &s) in rep.radii.iter().zip(&rep.flux_values) {
            let exact = 4.0 * PI * (0.6 - 1.0) * a.powf(0.6);
            assert!((s - exact).abs() < 1e-14);
        }
        assert!(rep.extrapolated_strength.unwrap().abs() < 1e-8);
        assert!(rep.compatible);
    }

    #[test]
    fn shifted_linear_gives_minus_two_pi() {
        let u = PowerSum::power(1.0).plus(0.5, 0.0);
        let rep = point_source_strength(&u, &default_radii()).unwrap();
        for &s in &rep.flux_values {
            assert!((s + 2.0 * PI).abs() < 1e-14);
        }
        assert!((rep.extrapolated_strength.unwrap() + 2.0 * PI).abs() < 1e-12);
        for a in [1e-2, 1e-3] {
            let numeric = sphere_flux(|r| r + 0.5, a);
            assert!((numeric + 2.0 * PI).abs() < 1e-4, "{numeric}");
        }
    }

    #[test]
    fn compatibility_examples() {
        let decades: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
        assert!(check_compatibility(&PowerSum::power(1.25), &decades, 1e-8).unwrap());
        assert!(!check_compatibility(&PowerSum::constant(1.0), &decades, 1e-8).unwrap());
        let rep = point_source_report(&PowerSum::power(-0.25), &decades, 1e-8).unwrap();
        assert!(rep.divergent);
        assert_eq!(rep.extrapolated_strength, None);
        assert!(!rep.compatible);
        for (&a, &s) in rep.radii.iter().zip(&rep.flux_values) {
            assert!((s + 5.0 * PI * a.powf(-0.25)).abs() < 1e-12 * s.abs());
        }
        // the default halving radii grow too slowly for the 2x rule alone
        let rep = point_source_strength(&PowerSum::power(-0.25), &default_radii()).unwrap();
        assert!(rep.divergent);
        assert!(rep.fitted_exponent.unwrap() < 0.0);
    }

    #[test]
    fn power_law_classes() {
        for a in [0.2, 0.6, 1.0, 1.25, 2.0, 3.5] {
            let rep = point_source_strength(&PowerSum::power(a), &default_radii()).unwrap();
            assert!(rep.extrapolated_strength.unwrap().abs() < 1e-8, "a = {a}");
        }
        for c in [0.5, -2.0, 3.0] {
            let rep = point_source_strength(&PowerSum::constant(c), &default_radii()).unwrap();
            let s = rep.extrapolated_strength.unwrap();
            assert!((s + 4.0 * PI * c).abs() < 1e-10 * c.abs());
        }
        for a in [-0.1, -0.25, -0.9] {
            let rep = point_source_strength(&PowerSum::power(a), &default_radii()).unwrap();
            assert!(rep.divergent, "a = {a}");
            assert!(rep.extrapolated_strength.is_none());
        }
    }

    #[test]
    fn mixed_powers_extrapolate() {
        // 1 + r²: |s| grows toward 4π but converges
        let u = PowerSum::constant(1.0).plus(1.0, 2.0);
        let rep = point_source_strength(&u, &default_radii()).unwrap();
        assert!(!rep.divergent);
        assert!((rep.extrapolated_strength.unwrap() + 4.0 * PI).abs() < 1e-9);
        // hydrogen-like 2r e^{-r}: two correction orders
        let u = Analytic::new(
            |r: f64| 2.0 * r * (-r).exp(),
            |r: f64| 2.0 * (1.0 - r) * (-r).exp(),
        );
        let radii: Vec<f64> = default_radii().into_iter().take(5).collect();
        let rep = point_source_strength(&u, &radii).unwrap();
        assert!(rep.extrapolated_strength.unwrap().abs() < 1e-6);
    }

    #[test]
    fn linearity() {
        let pairs = [
            (PowerSum::constant(1.0), PowerSum::power(1.0)),
            (PowerSum::power(0.6), PowerSum::constant(0.5)),
            (PowerSum::power(1.25), PowerSum::power(1.0).plus(0.5, 0.0)),
        ];
        let radii = default_radii();
        for (u, v) in pairs {
            for (alpha, beta) in [(1.0, 1.0), (2.5, -0.7), (-1.0, 3.0)] {
                let mut w = PowerSum { terms: vec![] };
                for &(c, a) in &u.terms {
                    w = w.plus(alpha * c, a);
                }
                for &(c, a) in &v.terms {
                    w = w.plus(beta * c, a);
                }
                let su = point_source_strength(&u, &radii)
                    .unwrap()
                    .extrapolated_strength
                    .unwrap();
                let sv = point_source_strength(&v, &radii)
                    .unwrap()
                    .extrapolated_strength
                    .unwrap();
                let sw = point_source_strength(&w, &radii)
                    .unwrap()
                    .extrapolated_strength
                    .unwrap();
                assert!((sw - (alpha * su + beta * sv)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn divergence_theorem_consistency() {
        // flux(a0) − flux(a) = ∫_a^a0 Δ(u/r) 4π r² dr = ∫_a^a0 4π r u'' dr
        type Real = Box<dyn Fn(f64) -> f64>;
        let cases: Vec<(Real, Real, Real)> = vec![
            (
                Box::new(|r: f64| r.sin() + 0.3),
                Box::new(|r: f64| r.cos()),
                Box::new(|r: f64| -r.sin()),
            ),
            (
                Box::new(|r: f64| (-r).exp() * r * r),
                Box::new(|r: f64| (-r).exp() * (2.0 * r - r * r)),
                Box::new(|r: f64| (-r).exp() * (2.0 - 4.0 * r + r * r)),
            ),
        ];
        let (a, a0) = (1e-3, 0.5);
        for (u, du, d2u) in cases {
            let surface = flux(u(a0), du(a0), a0) - flux(u(a), du(a), a);
            // composite Simpson
            let n = 20000;
            let h = (a0 - a) / n as f64;
            let g = |r: f64| 4.0 * PI * r * d2u(r);
            let mut volume = g(a) + g(a0);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                volume += w * g(a + k as f64 * h);
            }
            volume *= h / 3.0;
            assert!((surface - volume).abs() < 1e-8, "{surface} vs {volume}");
        }
    }

    #[test]
    fn input_errors() {
        let u = PowerSum::power(1.0);
        assert_eq!(
            point_source_strength(&u, &[0.1, 0.05]),
            Err(ResidualError::TooFewRadii(2))
        );
        assert_eq!(
            point_source_strength(&u, &[0.1, 0.2, 0.05]),
            Err(ResidualError::BadRadii)
        );
        assert_eq!(
            point_source_strength(&u, &[0.1, 0.0, -1.0]),
            Err(ResidualError::BadRadii)
        );
        let nan = Analytic::new(|_| f64::NAN, |_| 0.0);
        assert!(matches!(
            point_source_strength(&nan, &[0.1, 0.05, 0.01]),
            Err(ResidualError::NonFinite(_))
        ));
    }

    #[test]
    fn audits_sampled_functions() {
        let g = RadialGrid::linear(1e-6, 40.0, 20000).unwrap();
        let good = Trajectory::from_fn(g.clone(), |r| 2.0 * r * (-r).exp());
        let rep = audit_trajectory(&good, 1e-6).unwrap();
        assert!(rep.compatible, "{rep:?}");
        let bad = Trajectory::from_fn(g.clone(), |r| 1.0 + r);
        let rep = audit_trajectory(&bad, 1e-6).unwrap();
        assert!(!rep.compatible);
        assert!((rep.extrapolated_strength.unwrap() + 4.0 * PI).abs() < 1e-6);

        let coarse = RadialGrid::linear(1e-6, 40.0, 500).unwrap();
        let t = Trajectory::from_fn(coarse, |r| r);
        assert!(matches!(
            audit_trajectory(&t, 1e-6),
            Err(ResidualError::GridTooCoarse { .. })
        ));
    }
}
