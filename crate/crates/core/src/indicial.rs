//! Frobenius exponents at the origin and boundary-policy admissibility.
//!
//! Near `r = 0` the reduced radial equation with `lim r²V = −V₀` admits
//! `u ~ r^a` with `a(a−1) = l(l+1) − γ`, `γ = 2mV₀`. The roots are
//! `a± = ½ ± P` with `P = √((l+½)² − γ)`, real or imaginary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicialError {
    #[error("angular momentum must be non-negative, got {0}")]
    NegativeL(i64),
    #[error("gamma must be finite, got {0}")]
    NonFiniteGamma(f64),
    #[error("extension parameter meaningless: only one near-origin behavior is admissible (regime {0:?})")]
    ExtensionMeaningless(Regime),
    #[error("extension scale r_s must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("mixing angle chi must be finite, got {0}")]
    BadAngle(f64),
}

/// The index `P`; imaginary when the discriminant is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "magnitude", rename_all = "snake_case")]
pub enum IndexP {
    Real(f64),
    Imaginary(f64),
}

impl IndexP {
    pub fn real(self) -> Option<f64> {
        match self {
            IndexP::Real(p) => Some(p),
            IndexP::Imaginary(_) => None,
        }
    }

    pub fn magnitude(self) -> f64 {
        match self {
            IndexP::Real(p) | IndexP::Imaginary(p) => p,
        }
    }

    pub fn as_complex(self) -> Complex64 {
        match self {
            IndexP::Real(p) => Complex64::new(p, 0.0),
            IndexP::Imaginary(p) => Complex64::new(0.0, p),
        }
    }
}

/// Ordered from most to least constrained; a larger `gamma` never moves a
/// problem up this list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `P` imaginary: oscillatory collapse.
    FallToCenter,
    /// `0 ≤ P < ½`: both branches vanish at the origin.
    DirichletAmbiguous,
    /// `½ ≤ P < 1`: both branches square-integrable, only `a₊` vanishes.
    SquareIntegrableBoth,
    /// `P ≥ 1`: `r^(½−P)` is not square-integrable.
    UniqueAdmissible,
}

impl Regime {
    pub fn of(p: IndexP) -> Regime {
        match p {
            IndexP::Imaginary(_) => Regime::FallToCenter,
            IndexP::Real(p) if p < 0.5 => Regime::DirichletAmbiguous,
            IndexP::Real(p) if p < 1.0 => Regime::SquareIntegrableBoth,
            IndexP::Real(_) => Regime::UniqueAdmissible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicialResult {
    pub l: u32,
    pub gamma: f64,
    pub discriminant: f64,
    pub p: IndexP,
    /// `(a₊, a₋) = (½ + P, ½ − P)`
    pub exponents: (Complex64, Complex64),
    pub regime: Regime,
}

impl IndicialResult {
    /// Residual of the indicial equation `a(a−1) − l(l+1) + γ`.
    pub fn indicial_residual(&self, a: Complex64) -> Complex64 {
        let l = self.l as f64;
        a * (a - 1.0) - l * (l + 1.0) + self.gamma
    }

    pub fn upper(&self) -> Complex64 {
        self.exponents.0
    }

    pub fn lower(&self) -> Complex64 {
        self.exponents.1
    }
}

/// Exponents for angular momentum `l` and `gamma = 2mV₀`.
pub fn indicial_exponents(l: i64, gamma: f64) -> Result<IndicialResult, IndicialError> {
    if l < 0 {
        return Err(IndicialError::NegativeL(l));
    }
    if !gamma.is_finite() {
        return Err(IndicialError::NonFiniteGamma(gamma));
    }
    let lh = l as f64 + 0.5;
    let discriminant = lh * lh - gamma;
    let p = if discriminant >= 0.0 {
        IndexP::Real(discriminant.sqrt())
    } else {
        IndexP::Imaginary((-discriminant).sqrt())
    };
    let upper = Complex64::new(0.5, 0.0) + p.as_complex();
    // 1 − a₊ keeps a₊ + a₋ = 1 exact in the usual range of a₊.
    let lower = Complex64::new(1.0 - upper.re, -upper.im);
    Ok(IndicialResult {
        l: l as u32,
        gamma,
        discriminant,
        p,
        exponents: (upper, lower),
        regime: Regime::of(p),
    })
}

/// Which near-origin behaviors a policy accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityRule {
    /// `u(0) = 0`: exponent admissible iff `Re(a) > 0`.
    Dirichlet,
    /// `∫₀ u² dr < ∞`: exponent admissible iff `2 Re(a) > −1`.
    SquareIntegrable,
}

impl AdmissibilityRule {
    pub fn admits(self, a: Complex64) -> bool {
        match self {
            AdmissibilityRule::Dirichlet => a.re > 0.0,
            AdmissibilityRule::SquareIntegrable => 2.0 * a.re > -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryPolicy {
    Dirichlet,
    SquareIntegrableOnly,
    /// Near-origin form `u ∝ r^½ [cos χ (r/r_s)^P + sin χ (r/r_s)^(−P)]`,
    /// or `r^½ [cos χ + sin χ ln(r/r_s)]` when `P = 0`. `rule` is the
    /// admissibility rule under which both branches must be allowed.
    #[serde(rename = "sae_mixing")]
    SaeMixing {
        chi: f64,
        r_s: f64,
        #[serde(default = "default_sae_rule")]
        rule: AdmissibilityRule,
    },
}

fn default_sae_rule() -> AdmissibilityRule {
    AdmissibilityRule::SquareIntegrable
}

impl BoundaryPolicy {
    pub fn sae(chi: f64, r_s: f64) -> Self {
        BoundaryPolicy::SaeMixing {
            chi,
            r_s,
            rule: AdmissibilityRule::SquareIntegrable,
        }
    }

    pub fn rule(&self) -> AdmissibilityRule {
        match *self {
            BoundaryPolicy::Dirichlet => AdmissibilityRule::Dirichlet,
            BoundaryPolicy::SquareIntegrableOnly => AdmissibilityRule::SquareIntegrable,
            BoundaryPolicy::SaeMixing { rule, .. } => rule,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryPolicy::Dirichlet => "dirichlet",
            BoundaryPolicy::SquareIntegrableOnly => "square_integrable_only",
            BoundaryPolicy::SaeMixing { .. } => "sae_mixing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorMarker {
    /// `P` imaginary: no single-exponent answer exists.
    FallToCenter,
    /// `P = 0`: the second solution is `r^½ ln r`.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub exponents: Vec<Complex64>,
    pub needs_extension_parameter: bool,
    pub marker: Option<BehaviorMarker>,
    /// For SAE mixing, the fixed near-origin combination.
    pub mixing: Option<(f64, f64)>,
}

impl AdmissibleSet {
    pub fn contains(&self, a: Complex64) -> bool {
        self.exponents
            .iter()
            .any(|&b| (b - a).norm() <= 1e-12 * (1.0 + a.norm()))
    }

    /// The single admissible exponent when there is no ambiguity.
    pub fn unique(&self) -> Option<f64> {
        match (self.exponents.as_slice(), self.needs_extension_parameter) {
            ([a], false) if a.im == 0.0 => Some(a.re),
            _ => None,
        }
    }
}

fn admissible_under(res: &IndicialResult, rule: AdmissibilityRule) -> AdmissibleSet {
    let (upper, lower) = res.exponents;
    let marker = match res.p {
        IndexP::Imaginary(_) => Some(BehaviorMarker::FallToCenter),
        IndexP::Real(0.0) => Some(BehaviorMarker::Degenerate),
        IndexP::Real(_) => None,
    };
    let mut exponents = Vec::with_capacity(2);
    if rule.admits(upper) {
        exponents.push(upper);
    }
    // P = 0 has a single root; the log solution shares its exponent.
    if marker != Some(BehaviorMarker::Degenerate) && rule.admits(lower) {
        exponents.push(lower);
    }
    let needs_extension_parameter = match marker {
        Some(BehaviorMarker::Degenerate) => rule.admits(upper),
        _ => exponents.len() == 2,
    };
    AdmissibleSet {
        exponents,
        needs_extension_parameter,
        marker,
        mixing: None,
    }
}

pub fn admissible_behaviors(
    res: &IndicialResult,
    policy: &BoundaryPolicy,
) -> Result<AdmissibleSet, IndicialError> {
    match *policy {
        BoundaryPolicy::Dirichlet | BoundaryPolicy::SquareIntegrableOnly => {
            Ok(admissible_under(res, policy.rule()))
        }
        BoundaryPolicy::SaeMixing { chi, r_s, rule } => {
            if !(r_s > 0.0 && r_s.is_finite()) {
                return Err(IndicialError::BadScale(r_s));
            }
            if !chi.is_finite() {
                return Err(IndicialError::BadAngle(chi));
            }
            let mut set = admissible_under(res, rule);
            if !set.needs_extension_parameter {
                return Err(IndicialError::ExtensionMeaningless(res.regime));
            }
            set.mixing = Some((chi, r_s));
            Ok(set)
        }
    }
}
