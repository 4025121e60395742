use std::path::Path;

use radialis_core::indicial::AdmissibilityRule;
use radialis_core::{BoundaryPolicy, BuiltinKind, EquationForm, GridSpec, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Report destination; standard output when absent.
    pub path: Option<String>,
    pub format: Format,
    /// Directory for plot-ready text files.
    pub plot_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// SAE mixing angle of every SAE policy.
    Chi,
    /// SAE scale of every SAE policy.
    RS,
    /// Inverse-square strength `V₀`.
    V0,
    /// Coulomb charge.
    Z,
    Mass,
    /// Short-range cutoff radius.
    Cutoff,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Chi => "chi",
            SweepParameter::RS => "r_s",
            SweepParameter::V0 => "v0",
            SweepParameter::Z => "z",
            SweepParameter::Mass => "mass",
            SweepParameter::Cutoff => "cutoff",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParameter::Chi => "rad",
            SweepParameter::RS | SweepParameter::Cutoff => "length",
            SweepParameter::V0 => "energy*length^2",
            SweepParameter::Z => "energy*length",
            SweepParameter::Mass => "mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// An analytic trial function `u = Σ c·r^a` for the `residual` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// `[coefficient, exponent]` pairs.
    pub terms: Vec<[f64; 2]>,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_probe_tolerance")]
    pub tolerance: f64,
}

fn default_probe_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: BuiltinKind,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_l")]
    pub l: Vec<u32>,
    #[serde(default = "default_policies", deserialize_with = "strict_policies")]
    pub policies: Vec<BoundaryPolicy>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_window")]
    pub energy_window: [f64; 2],
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default)]
    pub match_radius: Option<f64>,
    #[serde(default)]
    pub form: EquationForm,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_mass() -> f64 {
    1.0
}

fn default_l() -> Vec<u32> {
    vec![0]
}

fn default_policies() -> Vec<BoundaryPolicy> {
    vec![BoundaryPolicy::Dirichlet]
}

/// A policy table, read strictly: `chi`, `r_s` and `rule` belong to
/// `sae_mixing` only.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyTable {
    name: String,
    chi: Option<f64>,
    r_s: Option<f64>,
    rule: Option<AdmissibilityRule>,
}

fn strict_policies<'de, D>(d: D) -> Result<Vec<BoundaryPolicy>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error;
    Vec::<PolicyTable>::deserialize(d)?
        .into_iter()
        .map(|t| match (t.name.as_str(), t.chi, t.r_s) {
            ("sae_mixing", Some(chi), Some(r_s)) => Ok(BoundaryPolicy::SaeMixing {
                chi,
                r_s,
                rule: t.rule.unwrap_or(AdmissibilityRule::SquareIntegrable),
            }),
            ("sae_mixing", chi, _) => Err(D::Error::missing_field(if chi.is_none() {
                "chi"
            } else {
                "r_s"
            })),
            ("dirichlet" | "square_integrable_only", None, None) if t.rule.is_none() => {
                Ok(if t.name == "dirichlet" {
                    BoundaryPolicy::Dirichlet
                } else {
                    BoundaryPolicy::SquareIntegrableOnly
                })
            }
            ("dirichlet" | "square_integrable_only", ..) => Err(D::Error::custom(format!(
                "`chi`, `r_s` and `rule` apply only to sae_mixing, not {}",
                t.name
            ))),
            (other, ..) => Err(D::Error::unknown_variant(
                other,
                &["dirichlet", "square_integrable_only", "sae_mixing"],
            )),
        })
        .collect()
}

fn default_window() -> [f64; 2] {
    [-1e3, -1e-6]
}

fn default_states() -> usize {
    4
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<String>,
    pub format: Option<Format>,
    pub tol_energy: Option<f64>,
    pub grid_points: Option<usize>,
    pub r_max: Option<f64>,
    /// `dotted.key=value` assignments, the value parsed as TOML.
    pub set: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Self::load(text, &Overrides::default())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Parses `text` (possibly empty), applies the overrides and validates.
    pub fn load(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let parse_error =
            |e: toml::de::Error| CliError::Config(format!("config: {}", e.to_string().trim_end()));
        let mut config: ExperimentConfig = if overrides.set.is_empty() {
            toml::from_str(text).map_err(parse_error)?
        } else {
            let mut table: toml::Table = text.parse().map_err(parse_error)?;
            for assignment in &overrides.set {
                apply_assignment(&mut table, assignment)?;
            }
            toml::Value::Table(table).try_into().map_err(parse_error)?
        };
        if let Some(out) = &overrides.out {
            config.output.path = Some(out.clone());
        }
        if let Some(format) = overrides.format {
            config.output.format = format;
        }
        if let Some(tol) = overrides.tol_energy {
            config.tolerances.energy_rel = tol;
        }
        if let Some(n) = overrides.grid_points {
            config.grid.n_points = n;
        }
        if let Some(r) = overrides.r_max {
            config.grid.r_max = r;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load_file(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::load(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("{field}: {why}")));
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad(
                "mass",
                format!("must be positive and finite, got {}", self.mass),
            );
        }
        if self.l.is_empty() {
            return bad("l", "needs at least one angular momentum".into());
        }
        if self.policies.is_empty() {
            return bad("policies", "needs at least one boundary policy".into());
        }
        for (i, policy) in self.policies.iter().enumerate() {
            if let BoundaryPolicy::SaeMixing { chi, r_s, .. } = *policy {
                if !chi.is_finite() {
                    return bad(
                        &format!("policies[{i}].chi"),
                        format!("must be finite, got {chi}"),
                    );
                }
                if !(r_s > 0.0 && r_s.is_finite()) {
                    return bad(
                        &format!("policies[{i}].r_s"),
                        format!("must be positive and finite, got {r_s}"),
                    );
                }
            }
        }
        radialis_core::Potential::builtin(self.potential)
            .map_err(|e| CliError::Config(format!("potential: {e}")))?;
        let g = &self.grid;
        if !(g.r_max > 0.0 && g.r_max.is_finite()) {
            return bad(
                "grid.r_max",
                format!("must be positive and finite, got {}", g.r_max),
            );
        }
        if g.n_points < 16 {
            return bad(
                "grid.n_points",
                format!("must be at least 16, got {}", g.n_points),
            );
        }
        if let Some(r_min) = g.r_min {
            if !(r_min > 0.0 && r_min < g.r_max) {
                return bad("grid.r_min", format!("must lie in (0, r_max), got {r_min}"));
            }
        }
        let [lo, hi] = self.energy_window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(
                "energy_window",
                format!("must be finite with lo < hi, got [{lo}, {hi}]"),
            );
        }
        let t = self.tolerances;
        if !(t.energy_rel > 0.0 && t.energy_rel < 1.0) {
            return bad(
                "tolerances.energy_rel",
                format!("must lie in (0, 1), got {}", t.energy_rel),
            );
        }
        if t.max_iterations == 0 {
            return bad("tolerances.max_iterations", "must be positive".into());
        }
        if let Some(rc) = self.cutoff {
            if !(rc > 0.0 && rc < g.r_max) {
                return bad("cutoff", format!("must lie in (0, r_max), got {rc}"));
            }
        }
        if let Some(rm) = self.match_radius {
            if !(rm > 0.0 && rm < g.r_max) {
                return bad("match_radius", format!("must lie in (0, r_max), got {rm}"));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep.values", "needs at least one value".into());
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return bad("sweep.values", format!("must be finite, got {v}"));
            }
        }
        if let Some(probe) = &self.probe {
            if probe.terms.is_empty() {
                return bad(
                    "probe.terms",
                    "needs at least one [coefficient, exponent] pair".into(),
                );
            }
            if probe.tolerance.is_nan() || probe.tolerance <= 0.0 {
                return bad(
                    "probe.tolerance",
                    format!("must be positive, got {}", probe.tolerance),
                );
            }
        }
        Ok(())
    }
}

fn apply_assignment(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment}: expected key=value")))?;
    let value = parse_value(raw.trim())
        .map_err(|e| CliError::Config(format!("--set {assignment}: {e}")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut node = table;
    for part in parents {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("--set {assignment}: `{part}` is not a table"))
        })?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Result<toml::Value, String> {
    let doc: toml::Table = format!("v = {raw}")
        .parse()
        .or_else(|_| format!("v = \"{raw}\"").parse())
        .map_err(|e: toml::de::Error| e.message().to_string())?;
    Ok(doc["v"].clone())
}
