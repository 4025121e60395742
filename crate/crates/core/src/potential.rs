//! Radial potentials with a declared near-origin strength.
//!
//! A [`Potential`] stores `V(r)` itself (ħ = 1, no mass folded in) together
//! with the declared limit `lim r→0 r²V(r)`. Classification into regular,
//! transitive-singular and strongly singular classes reads the declaration;
//! it never estimates the limit numerically.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
}

/// Near-origin class of a potential.
///
/// `TransitiveSingular` carries `v0 = −lim r²V(r)`: positive is attraction,
/// negative is repulsion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PotentialClass {
    Regular,
    TransitiveSingular { v0: f64 },
    StronglySingular,
}

/// How the solver's mass enters the potential.
///
/// The harmonic well is stored as `½ω²r²` and scaled by `m` at solve time so
/// that its spectrum is `(2n_r + l + 3/2)ω` for every mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassCoupling {
    None,
    Linear,
}

/// Builtin potential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinKind {
    /// `V = −Z/r`
    Coulomb { z: f64 },
    /// `V = ½ω²r²`, mass-coupled
    Harmonic { omega: f64 },
    /// `V = −V₀/r²`
    InverseSquare { v0: f64 },
    /// `V = −depth` inside `radius`, zero outside, `−depth/2` on the wall
    FiniteWell { depth: f64, radius: f64 },
    /// `V = −Z/r − V₀/r²`
    CoulombPlusInverseSquare { z: f64, v0: f64 },
    /// `V = coefficient · r^(−exponent)`
    PowerLaw { coefficient: f64, exponent: f64 },
}

impl BuiltinKind {
    fn validate(&self) -> Result<(), PotentialError> {
        let finite = |name, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(PotentialError::NonFinite { name, value })
            }
        };
        let positive = |name, value: f64| {
            finite(name, value)?;
            if value > 0.0 {
                Ok(())
            } else {
                Err(PotentialError::NonPositive { name, value })
            }
        };
        match *self {
            BuiltinKind::Coulomb { z } => finite("z", z),
            BuiltinKind::Harmonic { omega } => positive("omega", omega),
            BuiltinKind::InverseSquare { v0 } => finite("v0", v0),
            BuiltinKind::FiniteWell { depth, radius } => {
                finite("depth", depth)?;
                positive("radius", radius)
            }
            BuiltinKind::CoulombPlusInverseSquare { z, v0 } => {
                finite("z", z)?;
                finite("v0", v0)
            }
            BuiltinKind::PowerLaw {
                coefficient,
                exponent,
            } => {
                finite("coefficient", coefficient)?;
                finite("exponent", exponent)
            }
        }
    }

    fn origin_strength(&self) -> (f64, bool) {
        match *self {
            BuiltinKind::Coulomb { .. }
            | BuiltinKind::Harmonic { .. }
            | BuiltinKind::FiniteWell { .. } => (0.0, false),
            BuiltinKind::InverseSquare { v0 }
            | BuiltinKind::CoulombPlusInverseSquare { v0, .. } => (-v0, false),
            BuiltinKind::PowerLaw {
                coefficient,
                exponent,
            } => {
                if coefficient == 0.0 || exponent < 2.0 {
                    (0.0, false)
                } else if exponent == 2.0 {
                    (coefficient, false)
                } else {
                    (0.0, true)
                }
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            BuiltinKind::Coulomb { z } => format!("coulomb(Z={z})"),
            BuiltinKind::Harmonic { omega } => format!("harmonic(omega={omega})"),
            BuiltinKind::InverseSquare { v0 } => format!("inverse_square(V0={v0})"),
            BuiltinKind::FiniteWell { depth, radius } => {
                format!("finite_well(depth={depth}, radius={radius})")
            }
            BuiltinKind::CoulombPlusInverseSquare { z, v0 } => {
                format!("coulomb_plus_inverse_square(Z={z}, V0={v0})")
            }
            BuiltinKind::PowerLaw {
                coefficient,
                exponent,
            } => format!("power_law({coefficient}*r^-{exponent})"),
        }
    }

    fn eval(&self, r: f64) -> f64 {
        match *self {
            BuiltinKind::Coulomb { z } => -z / r,
            BuiltinKind::Harmonic { omega } => 0.5 * omega * omega * r * r,
            BuiltinKind::InverseSquare { v0 } => -v0 / (r * r),
            BuiltinKind::FiniteWell { depth, radius } => finite_well(depth, radius, r),
            BuiltinKind::CoulombPlusInverseSquare { z, v0 } => -z / r - v0 / (r * r),
            BuiltinKind::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * r.powf(-exponent),
        }
    }

    /// The tail with its inverse-square part removed, computed without
    /// cancellation.
    fn eval_regular(&self, r: f64) -> f64 {
        match *self {
            BuiltinKind::InverseSquare { .. } => 0.0,
            BuiltinKind::CoulombPlusInverseSquare { z, .. } => -z / r,
            BuiltinKind::PowerLaw { exponent: 2.0, .. } => 0.0,
            _ => self.eval(r),
        }
    }
}

fn finite_well(depth: f64, radius: f64, r: f64) -> f64 {
    // mean of the two sides on the wall
    if (r - radius).abs() <= 1e-12 * radius {
        -0.5 * depth
    } else if r < radius {
        -depth
    } else {
        0.0
    }
}

type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Builtin(BuiltinKind),
    Custom(TailFn),
}

/// A radial potential `V(r)` with its declared near-origin strength.
#[derive(Clone)]
pub struct Potential {
    shape: Shape,
    origin_strength: f64,
    strongly_singular: bool,
    mass_coupling: MassCoupling,
    confining: bool,
    discontinuities: Vec<f64>,
    label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("origin_strength", &self.origin_strength)
            .field("strongly_singular", &self.strongly_singular)
            .field("mass_coupling", &self.mass_coupling)
            .finish()
    }
}

impl Potential {
    pub fn builtin(kind: BuiltinKind) -> Result<Self, PotentialError> {
        kind.validate()?;
        let (origin_strength, strongly_singular) = kind.origin_strength();
        let (mass_coupling, confining) = match kind {
            BuiltinKind::Harmonic { .. } => (MassCoupling::Linear, true),
            BuiltinKind::PowerLaw {
                coefficient,
                exponent,
            } => (MassCoupling::None, exponent < 0.0 && coefficient > 0.0),
            _ => (MassCoupling::None, false),
        };
        let discontinuities = match kind {
            BuiltinKind::FiniteWell { radius, .. } => vec![radius],
            _ => Vec::new(),
        };
        Ok(Self {
            label: kind.label(),
            shape: Shape::Builtin(kind),
            origin_strength,
            strongly_singular,
            mass_coupling,
            confining,
            discontinuities,
        })
    }

    pub fn coulomb(z: f64) -> Result<Self, PotentialError> {
        Self::builtin(BuiltinKind::Coulomb { z })
    }

    pub fn harmonic(omega: f64) -> Result<Self, PotentialError> {
        Self::builtin(BuiltinKind::Harmonic { omega })
    }

    pub fn inverse_square(v0: f64) -> Result<Self, PotentialError> {
        Self::builtin(BuiltinKind::InverseSquare { v0 })
    }

    pub fn finite_well(depth: f64, radius: f64) -> Result<Self, PotentialError> {
        Self::builtin(BuiltinKind::FiniteWell { depth, radius })
    }

    pub fn coulomb_plus_inverse_square(z: f64, v0: f64) -> Result<Self, PotentialError> {
        Self::builtin(BuiltinKind::CoulombPlusInverseSquare { z, v0 })
    }

    /// A user potential. `origin_strength` is the declared `lim r→0 r²V(r)`;
    /// set `strongly_singular` when that limit diverges.
    pub fn custom<F>(
        label: impl Into<String>,
        tail: F,
        origin_strength: f64,
        strongly_singular: bool,
    ) -> Result<Self, PotentialError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !origin_strength.is_finite() {
            return Err(PotentialError::NonFinite {
                name: "origin_strength",
                value: origin_strength,
            });
        }
        Ok(Self {
            shape: Shape::Custom(Arc::new(tail)),
            origin_strength,
            strongly_singular,
            mass_coupling: MassCoupling::None,
            confining: false,
            discontinuities: Vec::new(),
            label: label.into(),
        })
    }

    /// Marks a custom potential as growing without bound at large `r`, which
    /// lets bound-state windows extend above zero.
    pub fn with_confinement(mut self, confining: bool) -> Self {
        self.confining = confining;
        self
    }

    /// Declares radii where `V` jumps, so grids can place a node there.
    pub fn with_discontinuities(mut self, radii: Vec<f64>) -> Self {
        self.discontinuities = radii;
        self.discontinuities.sort_by(f64::total_cmp);
        self
    }

    /// Pointwise sum; origin strengths add.
    pub fn plus(&self, other: &Potential) -> Potential {
        let (a, b) = (self.clone(), other.clone());
        Potential {
            label: format!("{} + {}", self.label, other.label),
            origin_strength: self.origin_strength + other.origin_strength,
            strongly_singular: self.strongly_singular || other.strongly_singular,
            mass_coupling: MassCoupling::None,
            confining: self.confining || other.confining,
            discontinuities: {
                let mut d = [
                    self.discontinuities.as_slice(),
                    other.discontinuities.as_slice(),
                ]
                .concat();
                d.sort_by(f64::total_cmp);
                d.dedup();
                d
            },
            shape: Shape::Custom(Arc::new(move |r| a.tail(r) + b.tail(r))),
        }
    }

    pub fn evaluate(&self, r: f64) -> Result<f64, PotentialError> {
        if r > 0.0 {
            Ok(self.tail(r))
        } else {
            Err(PotentialError::NonPositiveRadius(r))
        }
    }

    /// `V(r)` without the radius check, for hot loops on validated grids.
    #[inline]
    pub fn tail(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Builtin(kind) => kind.eval(r),
            Shape::Custom(f) => f(r),
        }
    }

    /// `V(r) − origin_strength / r²`.
    #[inline]
    pub fn regular_tail(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Builtin(kind) => kind.eval_regular(r),
            Shape::Custom(f) => f(r) - self.origin_strength / (r * r),
        }
    }

    pub fn origin_strength(&self) -> f64 {
        self.origin_strength
    }

    pub fn is_strongly_singular(&self) -> bool {
        self.strongly_singular
    }

    pub fn mass_coupling(&self) -> MassCoupling {
        self.mass_coupling
    }

    pub fn is_confining(&self) -> bool {
        self.confining
    }

    /// Radii where `V` jumps, ascending.
    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn builtin_kind(&self) -> Option<BuiltinKind> {
        match self.shape {
            Shape::Builtin(kind) => Some(kind),
            Shape::Custom(_) => None,
        }
    }

    pub fn classify(&self) -> PotentialClass {
        classify(self)
    }
}

pub fn classify(p: &Potential) -> PotentialClass {
    if p.strongly_singular {
        PotentialClass::StronglySingular
    } else if p.origin_strength == 0.0 {
        PotentialClass::Regular
    } else {
        PotentialClass::TransitiveSingular {
            v0: -p.origin_strength,
        }
    }
}
