use serde::{Deserialize, Serialize};

use crate::indicial::{
    admissible_behaviors, indicial_exponents, AdmissibleSet, BehaviorMarker, BoundaryPolicy,
    IndexP, IndicialResult, Regime,
};
use crate::numerics::{RadialGrid, Spacing};
use crate::potential::{MassCoupling, Potential, PotentialClass};

use super::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bisection stops once the bracket is this small relative to `|E|`.
    pub energy_rel: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_rel: 1e-10,
            max_iterations: 200,
        }
    }
}

/// Which algebraic form of the radial coefficient is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    /// `f = l(l+1)/r² + 2m(V − E)`
    #[default]
    Radial,
    /// `f = (P² − ¼)/r² + 2m(V_reg − E)`, with the inverse-square part of
    /// `V` folded into `P`.
    InverseSquare,
}

/// Grid choice before the potential is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingChoice {
    /// Logarithmic for transitive-singular potentials, cutoffs and SAE
    /// mixing; linear otherwise.
    #[default]
    Auto,
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub spacing: SpacingChoice,
    /// Defaults to `1e-6` on linear grids and `1e-8` on logarithmic ones,
    /// or three decades below a cutoff radius.
    pub r_min: Option<f64>,
    pub r_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing: SpacingChoice::Auto,
            r_min: None,
            r_max: 80.0,
            n_points: 40000,
        }
    }
}

impl GridSpec {
    /// Fills in the spacing and `r_min` for this problem.
    pub fn resolve(
        &self,
        potential: &Potential,
        policy: &BoundaryPolicy,
        cutoff: Option<f64>,
    ) -> GridSpec {
        let singular = matches!(
            potential.classify(),
            PotentialClass::TransitiveSingular { .. }
        );
        let sae = matches!(policy, BoundaryPolicy::SaeMixing { .. });
        let spacing = match self.spacing {
            SpacingChoice::Auto if singular || sae || cutoff.is_some() => {
                SpacingChoice::Logarithmic
            }
            SpacingChoice::Auto => SpacingChoice::Linear,
            other => other,
        };
        let r_min = self.r_min.unwrap_or_else(|| {
            let base = match spacing {
                SpacingChoice::Linear => 1e-6,
                _ => 1e-8,
            };
            cutoff.map_or(base, |rc| base.min(1e-3 * rc))
        });
        GridSpec {
            spacing,
            r_min: Some(r_min),
            ..*self
        }
    }

    /// Builds the grid, placing a node on the first discontinuity of the
    /// potential inside the range.
    pub fn build(
        &self,
        potential: &Potential,
        policy: &BoundaryPolicy,
        cutoff: Option<f64>,
    ) -> Result<RadialGrid, SolveError> {
        let spec = self.resolve(potential, policy, cutoff);
        let r_min = spec.r_min.unwrap_or(1e-6);
        let anchor = potential
            .discontinuities()
            .iter()
            .copied()
            .find(|&d| d > r_min && d < spec.r_max);
        let grid = match (spec.spacing, anchor) {
            (SpacingChoice::Logarithmic, Some(a)) => {
                RadialGrid::logarithmic_anchored(r_min, spec.r_max, spec.n_points, a)
            }
            (SpacingChoice::Logarithmic, None) => {
                RadialGrid::logarithmic(r_min, spec.r_max, spec.n_points)
            }
            (_, Some(a)) => RadialGrid::linear_anchored(r_min, spec.r_max, spec.n_points, a),
            (_, None) => RadialGrid::linear(r_min, spec.r_max, spec.n_points),
        }?;
        Ok(grid)
    }
}

/// One bound-state problem: potential, mass, angular momentum, boundary
/// policy, grid and energy window.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub potential: Potential,
    pub mass: f64,
    pub l: u32,
    pub policy: BoundaryPolicy,
    pub grid: RadialGrid,
    pub energy_window: (f64, f64),
    /// Defaults to the outer classical turning point at each trial energy.
    pub match_radius: Option<f64>,
    pub tolerances: Tolerances,
    /// Short-range cutoff `r_c`: `V(r)` is replaced by `V(r_c)` below it.
    pub cutoff: Option<f64>,
    pub form: EquationForm,
}

impl SolveRequest {
    pub fn new(
        potential: Potential,
        l: u32,
        policy: BoundaryPolicy,
        grid: RadialGrid,
        energy_window: (f64, f64),
    ) -> Self {
        Self {
            potential,
            mass: 1.0,
            l,
            policy,
            grid,
            energy_window,
            match_radius: None,
            tolerances: Tolerances::default(),
            cutoff: None,
            form: EquationForm::Radial,
        }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_match_radius(mut self, r: f64) -> Self {
        self.match_radius = Some(r);
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn with_cutoff(mut self, r_c: f64) -> Self {
        self.cutoff = Some(r_c);
        self
    }

    pub fn with_form(mut self, form: EquationForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_policy(mut self, policy: BoundaryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.energy_window = (lo, hi);
        self
    }

    fn mass_scale(&self) -> f64 {
        match self.potential.mass_coupling() {
            MassCoupling::Linear => self.mass,
            MassCoupling::None => 1.0,
        }
    }

    /// `γ = 2mV₀` of the problem actually solved; zero under a cutoff.
    pub fn gamma(&self) -> f64 {
        if self.cutoff.is_some() {
            return 0.0;
        }
        -2.0 * self.mass * self.mass_scale() * self.potential.origin_strength()
    }

    pub fn indicial(&self) -> Result<IndicialResult, SolveError> {
        Ok(indicial_exponents(self.l as i64, self.gamma())?)
    }

    pub(crate) fn coefficient(&self) -> Coefficient<'_> {
        let lf = self.l as f64;
        let (inverse_square, regular) = match (self.form, self.cutoff) {
            (EquationForm::InverseSquare, None) => {
                let lh = lf + 0.5;
                (lh * lh - self.gamma() - 0.25, true)
            }
            _ => (lf * (lf + 1.0), false),
        };
        Coefficient {
            potential: &self.potential,
            inverse_square,
            two_m: 2.0 * self.mass,
            mass_scale: self.mass_scale(),
            cutoff: self.cutoff,
            regular,
        }
    }

    /// Checks the request and fixes the near-origin seed.
    pub fn validate(&self) -> Result<Validated, SolveError> {
        let invalid = |msg: String| Err(SolveError::InvalidRequest(msg));
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return invalid(format!(
                "mass must be positive and finite, got {}",
                self.mass
            ));
        }
        if self.potential.classify() == PotentialClass::StronglySingular {
            return Err(SolveError::StronglySingular(
                self.potential.label().to_string(),
            ));
        }
        if self.grid.spacing() == Spacing::Irregular {
            return invalid("grid must be linear or logarithmic".into());
        }
        let (lo, hi) = self.energy_window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!(
                "energy window must satisfy E_lo < E_hi, got ({lo}, {hi})"
            ));
        }
        if !self.potential.is_confining() && hi >= 0.0 {
            return invalid(format!(
                "energy window must lie below the continuum edge E = 0, got E_hi = {hi}"
            ));
        }
        let t = self.tolerances;
        if !(t.energy_rel > 0.0 && t.energy_rel < 1.0) || t.max_iterations == 0 {
            return invalid(
                "tolerances must satisfy 0 < energy_rel < 1 and max_iterations > 0".into(),
            );
        }
        if let Some(rc) = self.cutoff {
            if !(rc.is_finite() && rc > self.grid.r_min() && rc < self.grid.r_max()) {
                return invalid(format!(
                    "cutoff radius {rc} must lie inside the grid ({}, {})",
                    self.grid.r_min(),
                    self.grid.r_max()
                ));
            }
        }
        if let Some(rm) = self.match_radius {
            if !(rm > self.grid.r_min() && rm < self.grid.r_max()) {
                return invalid(format!("match radius {rm} lies outside the grid"));
            }
        }
        let indicial = self.indicial()?;
        let admissible = admissible_behaviors(&indicial, &self.policy)?;
        let seed = choose_seed(&indicial, &admissible, &self.policy)?;
        Ok(Validated {
            indicial,
            admissible,
            seed,
        })
    }
}

/// A request that passed validation, with its near-origin data.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub indicial: IndicialResult,
    pub admissible: AdmissibleSet,
    pub seed: Seed,
}

/// Near-origin behavior imposed on the outward solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seed {
    /// `u = r^a`
    Power { exponent: f64 },
    /// `u = r^½ [cos χ (r/r_s)^P + sin χ (r/r_s)^(−P)]`
    Mixed { p: f64, chi: f64, r_s: f64 },
    /// `u = r^½ [cos χ + sin χ ln(r/r_s)]`
    Logarithmic { chi: f64, r_s: f64 },
}

impl Seed {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Seed::Power { exponent } => r.powf(exponent),
            Seed::Mixed { p, chi, r_s } => {
                let x = r / r_s;
                r.sqrt() * (chi.cos() * x.powf(p) + chi.sin() * x.powf(-p))
            }
            Seed::Logarithmic { chi, r_s } => r.sqrt() * (chi.cos() + chi.sin() * (r / r_s).ln()),
        }
    }

    /// The seed with the Frobenius corrections implied by `local`.
    pub fn value_with(&self, r: f64, local: LocalExpansion) -> f64 {
        let branch = |c: f64, a: f64| c * r.powf(a) * local.factor(a, r);
        match *self {
            Seed::Power { exponent } => branch(1.0, exponent),
            Seed::Mixed { p, chi, r_s } => {
                branch(chi.cos() * r_s.powf(-p), 0.5 + p) + branch(chi.sin() * r_s.powf(p), 0.5 - p)
            }
            Seed::Logarithmic { .. } => self.value(r),
        }
    }

    /// Smallest radius at which the χ-carrying branch of a mixed seed is at
    /// least `10⁻⁶` of the other; zero for single-branch seeds.
    pub fn resolvable_radius(&self) -> f64 {
        match *self {
            Seed::Mixed { p, r_s, .. } => r_s * 10f64.powf(-3.0 / p),
            _ => 0.0,
        }
    }

    /// The seed in the grid's natural variable at node `at` and its
    /// difference to node `at + 1`. Each power-law branch is advanced by its
    /// exact one-step factor, so a branch that is tiny there keeps its full
    /// relative precision. Power-law branches carry the Frobenius
    /// corrections implied by `local`; the logarithmic seed does not.
    pub fn natural_pair(&self, grid: &RadialGrid, at: usize, local: LocalExpansion) -> (f64, f64) {
        let nodes = grid.nodes();
        let (r0, r1) = (nodes[at], nodes[at + 1]);
        let logarithmic = grid.spacing() == Spacing::Logarithmic;
        // ln(r1/r0), the exact step the recurrence assumes on log grids
        let step = if logarithmic {
            grid.step()
        } else {
            ((r1 - r0) / r0).ln_1p()
        };
        let shift = if logarithmic { -0.5 } else { 0.0 };
        let branch = |c: f64, a: f64| {
            let (s0, s1) = (local.factor(a, r0), local.factor(a, r1));
            let base = c * r0.powf(a + shift);
            (
                base * s0,
                base * (((a + shift) * step).exp_m1() * s1 + local.difference(a, r0, r1)),
            )
        };
        match *self {
            Seed::Power { exponent } => branch(1.0, exponent),
            Seed::Mixed { p, chi, r_s } => {
                let (a0, da) = branch(chi.cos() * r_s.powf(-p), 0.5 + p);
                let (b0, db) = branch(chi.sin() * r_s.powf(p), 0.5 - p);
                (a0 + b0, da + db)
            }
            Seed::Logarithmic { chi, r_s } => {
                let level = chi.cos() + chi.sin() * (r0 / r_s).ln();
                if logarithmic {
                    (level, chi.sin() * step)
                } else {
                    let root = r0.sqrt();
                    (
                        root * level,
                        root * (0.5 * step).exp_m1() * level + chi.sin() * r1.sqrt() * step,
                    )
                }
            }
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Seed::Power { exponent } => Some(exponent),
            _ => None,
        }
    }
}

/// `f(r) − (P² − ¼)/r² ≈ inv_r / r + constant` near the origin.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LocalExpansion {
    pub inv_r: f64,
    pub constant: f64,
}

impl LocalExpansion {
    /// Fits the two terms through the regular part `g` at two radii.
    pub fn through(r0: f64, g0: f64, r1: f64, g1: f64) -> Self {
        let inv_r = (g0 - g1) * r0 * r1 / (r1 - r0);
        let out = Self {
            inv_r,
            constant: g1 - inv_r / r1,
        };
        if out.inv_r.is_finite() && out.constant.is_finite() {
            out
        } else {
            Self::default()
        }
    }

    /// Coefficients `c₁ … c₆` of `r^a (1 + c₁r + c₂r² + …)`. The series
    /// stops at a resonant order, where a logarithm would enter.
    fn series(&self, a: f64) -> [f64; SERIES_TERMS] {
        let (b, c) = (self.inv_r, self.constant);
        let mut out = [0.0; SERIES_TERMS];
        let (mut prev, mut prev2) = (1.0, 0.0);
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            let d = kf * (2.0 * a + kf - 1.0);
            if d.abs() < 1e-9 {
                break;
            }
            let ck = (b * prev + c * prev2) / d;
            out[k - 1] = ck;
            (prev, prev2) = (ck, prev);
        }
        out
    }

    /// `1 + c₁r + c₂r² + …`
    fn factor(&self, a: f64, r: f64) -> f64 {
        1.0 + self
            .series(a)
            .iter()
            .rev()
            .fold(0.0, |acc, c| (acc + c) * r)
    }

    /// `factor(a, r1) − factor(a, r0)` without cancellation.
    fn difference(&self, a: f64, r0: f64, r1: f64) -> f64 {
        // r1^k − r0^k = (r1 − r0) Σ_{j<k} r1^j r0^{k−1−j}
        let mut power_diff = 0.0;
        let mut p1 = 1.0;
        let mut total = 0.0;
        for ck in self.series(a) {
            power_diff = power_diff * r0 + p1;
            total += ck * power_diff;
            p1 *= r1;
        }
        (r1 - r0) * total
    }
}

const SERIES_TERMS: usize = 6;

fn choose_seed(
    indicial: &IndicialResult,
    admissible: &AdmissibleSet,
    policy: &BoundaryPolicy,
) -> Result<Seed, SolveError> {
    if indicial.regime == Regime::FallToCenter {
        return Err(SolveError::FallToCenter {
            discriminant: indicial.discriminant,
        });
    }
    match *policy {
        BoundaryPolicy::SaeMixing { chi, r_s, .. } => match (admissible.marker, indicial.p) {
            (Some(BehaviorMarker::Degenerate), _) => Ok(Seed::Logarithmic { chi, r_s }),
            (_, IndexP::Real(p)) => Ok(Seed::Mixed { p, chi, r_s }),
            (_, IndexP::Imaginary(_)) => Err(SolveError::FallToCenter {
                discriminant: indicial.discriminant,
            }),
        },
        _ => match admissible.unique() {
            Some(exponent) => Ok(Seed::Power { exponent }),
            None => Err(SolveError::AmbiguousBoundary {
                policy: policy.name(),
                regime: indicial.regime,
            }),
        },
    }
}

/// The coefficient `f(r)` of `u'' = f u` at a fixed energy.
#[derive(Clone, Copy)]
pub(crate) struct Coefficient<'a> {
    potential: &'a Potential,
    inverse_square: f64,
    two_m: f64,
    mass_scale: f64,
    cutoff: Option<f64>,
    regular: bool,
}

impl Coefficient<'_> {
    #[inline]
    pub(crate) fn eval(&self, r: f64, energy: f64) -> f64 {
        let rv = self.cutoff.map_or(r, |rc| r.max(rc));
        let v = if self.regular {
            self.potential.regular_tail(rv)
        } else {
            self.potential.tail(rv)
        };
        self.inverse_square / (r * r) + self.two_m * (self.mass_scale * v - energy)
    }

    /// `f(r)` without its `r⁻²` part.
    pub(crate) fn regular_part(&self, r: f64, energy: f64) -> f64 {
        let v = match self.cutoff {
            Some(rc) => self.potential.tail(r.max(rc)),
            None => self.potential.regular_tail(r),
        };
        self.two_m * (self.mass_scale * v - energy)
    }

    pub(crate) fn local_expansion(&self, r0: f64, r1: f64, energy: f64) -> LocalExpansion {
        LocalExpansion::through(
            r0,
            self.regular_part(r0, energy),
            r1,
            self.regular_part(r1, energy),
        )
    }
}

/// `f(r) = l(l+1)/r² + 2m(V(r) − E)`, or the equivalent inverse-square form
/// `(P² − ¼)/r² + 2m(V_reg(r) − E)` when the request asks for it.
pub fn effective_f(req: &SolveRequest, energy: f64) -> impl Fn(f64) -> f64 + '_ {
    let c = req.coefficient();
    move |r| c.eval(r, energy)
}

/// Values of the policy's near-origin solution at the first two grid nodes.
pub fn origin_seed(req: &SolveRequest) -> Result<(f64, f64), SolveError> {
    let seed = req.validate()?.seed;
    let nodes = req.grid.nodes();
    Ok((seed.value(nodes[0]), seed.value(nodes[1])))
}
