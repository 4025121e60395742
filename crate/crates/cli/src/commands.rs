use radialis_core::residual::{default_radii, point_source_report, PowerSum};
use radialis_core::{
    admissible_behaviors, audit_eigenstate, classify, indicial_exponents, spectrum, BoundaryPolicy,
    BuiltinKind, Eigenstate, Potential, PotentialClass, SolveError, SolveRequest,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, SweepParameter};
use crate::error::CliError;
use crate::json::{hash, to_value};
use crate::plot::{Cell, Table};

/// Environment variable capping the sweep worker threads.
pub const THREADS_VAR: &str = "RADIALIS_THREADS";

const AGREEMENT_REL: f64 = 1e-6;

/// A command's JSON report, its plot tables and the table written for
/// `--format csv`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub plots: Vec<Table>,
    pub csv: Table,
}

fn potential(config: &ExperimentConfig) -> Result<Potential, CliError> {
    Potential::builtin(config.potential).map_err(|e| CliError::Config(format!("potential: {e}")))
}

fn gamma_of(config: &ExperimentConfig, p: &Potential) -> f64 {
    let scale = match p.mass_coupling() {
        radialis_core::potential::MassCoupling::Linear => config.mass,
        radialis_core::potential::MassCoupling::None => 1.0,
    };
    // + 0.0 turns −0 into 0
    -2.0 * config.mass * scale * p.origin_strength() + 0.0
}

/// The solver request for one policy and angular momentum.
pub fn build_request(
    config: &ExperimentConfig,
    policy: BoundaryPolicy,
    l: u32,
) -> Result<SolveRequest, SolveError> {
    let p = potential(config).map_err(|e| SolveError::InvalidRequest(e.to_string()))?;
    let grid = config.grid.build(&p, &policy, config.cutoff)?;
    let [lo, hi] = config.energy_window;
    let mut req = SolveRequest::new(p, l, policy, grid, (lo, hi))
        .with_mass(config.mass)
        .with_tolerances(config.tolerances)
        .with_form(config.form);
    if let Some(rc) = config.cutoff {
        req = req.with_cutoff(rc);
    }
    if let Some(rm) = config.match_radius {
        req = req.with_match_radius(rm);
    }
    Ok(req)
}

fn provenance(config: &ExperimentConfig) -> Value {
    let resolved = to_value(config);
    json!({
        "config_hash": hash(&resolved),
        "config": resolved,
        "tolerances": to_value(&config.tolerances),
    })
}

fn error_value(e: &SolveError) -> Value {
    json!({
        "message": e.to_string(),
        "refusal": e.is_refusal() || matches!(e, SolveError::StronglySingular(_)),
        "needs_extension_parameter": matches!(e, SolveError::AmbiguousBoundary { .. }),
    })
}

fn state_value(index: usize, s: &Eigenstate) -> Value {
    let audit = match audit_eigenstate(s) {
        Ok(r) => json!({
            "extrapolated_strength": r.extrapolated_strength,
            "fitted_exponent": r.fitted_exponent,
            "divergent": r.divergent,
            "tolerance": r.tolerance,
            "compatible": r.compatible,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({
        "index": index,
        "energy": s.energy,
        "node_count": s.node_count,
        "norm_check": s.norm_check,
        "near_origin_exponent": s.near_origin_exponent,
        "match_radius": s.match_radius,
        "mismatch": s.mismatch,
        "iterations": s.iterations,
        "audit": audit,
    })
}

fn cell_tag(i: usize, policy: &BoundaryPolicy, l: u32) -> String {
    format!("p{i}_{}_l{l}", policy.name())
}

fn wavefunction_table(tag: &str, index: usize, s: &Eigenstate) -> Table {
    let mut t = Table::new(
        format!("state_{tag}_n{index}"),
        vec!["r [length]".into(), "u [length^-1/2]".into()],
    );
    let nodes = s.u.grid().nodes();
    t.rows = nodes
        .iter()
        .zip(s.u.values())
        .map(|(&r, &u)| vec![r.into(), u.into()])
        .collect();
    t
}

fn spectrum_table(tag: &str, states: &[Eigenstate]) -> Table {
    let mut t = Table::new(
        format!("spectrum_{tag}"),
        vec!["index".into(), "E [energy]".into()],
    );
    t.rows = states
        .iter()
        .enumerate()
        .map(|(k, s)| vec![k.into(), s.energy.into()])
        .collect();
    t
}

pub fn run_classify(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = potential(config)?;
    let class = classify(&p);
    let gamma = gamma_of(config, &p);
    let mut report = to_value(&class);
    let obj = report
        .as_object_mut()
        .expect("class serializes to an object");
    obj.insert("label".into(), json!(p.label()));
    obj.insert("origin_strength".into(), json!(p.origin_strength()));
    obj.insert("mass".into(), json!(config.mass));
    obj.insert("gamma".into(), json!(gamma));
    obj.insert(
        "solvable".into(),
        json!(class != PotentialClass::StronglySingular),
    );
    let mut csv = Table::new(
        "classify",
        vec!["origin_strength [energy*length^2]".into(), "gamma".into()],
    );
    csv.rows
        .push(vec![p.origin_strength().into(), gamma.into()]);
    Ok(Outcome {
        report,
        plots: Vec::new(),
        csv,
    })
}

/// Exponents for every configured `l`; `gamma` replaces the value implied by
/// the potential when given.
pub fn run_indicial(config: &ExperimentConfig, gamma: Option<f64>) -> Result<Outcome, CliError> {
    let p = potential(config)?;
    let gamma = gamma.unwrap_or_else(|| {
        if config.cutoff.is_some() {
            0.0
        } else {
            gamma_of(config, &p)
        }
    });
    let mut csv = Table::new(
        "indicial",
        [
            "l",
            "gamma",
            "discriminant",
            "a_plus_re",
            "a_plus_im",
            "a_minus_re",
            "a_minus_im",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let mut entries = Vec::new();
    for &l in &config.l {
        let res =
            indicial_exponents(l as i64, gamma).map_err(|e| CliError::Config(e.to_string()))?;
        let policies: Vec<Value> = config
            .policies
            .iter()
            .map(|policy| match admissible_behaviors(&res, policy) {
                Ok(set) => json!({ "policy": to_value(policy), "admissible": to_value(&set) }),
                Err(e) => json!({ "policy": to_value(policy), "error": e.to_string() }),
            })
            .collect();
        let mut entry = to_value(&res);
        entry["policies"] = Value::Array(policies);
        entries.push(entry);
        let (up, down) = res.exponents;
        csv.rows.push(vec![
            l.into(),
            gamma.into(),
            res.discriminant.into(),
            up.re.into(),
            up.im.into(),
            down.re.into(),
            down.im.into(),
        ]);
    }
    Ok(Outcome {
        report: json!({ "gamma": gamma, "results": entries }),
        plots: Vec::new(),
        csv,
    })
}

pub fn run_residual(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut csv = Table::new(
        "residual",
        vec!["radius [length]".into(), "flux [length^1/2]".into()],
    );
    if let Some(probe) = &config.probe {
        let sum = PowerSum {
            terms: probe.terms.iter().map(|&[c, a]| (c, a)).collect(),
        };
        let radii = probe.radii.clone().unwrap_or_else(default_radii);
        let report = point_source_report(&sum, &radii, probe.tolerance)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        csv.rows = report
            .radii
            .iter()
            .zip(&report.flux_values)
            .map(|(&a, &s)| vec![a.into(), s.into()])
            .collect();
        return Ok(Outcome {
            report: json!({ "probe": to_value(probe), "report": to_value(&report) }),
            plots: vec![csv.clone()],
            csv,
        });
    }
    let mut cells = Vec::new();
    for (i, &policy) in config.policies.iter().enumerate() {
        for &l in &config.l {
            let req = build_request(config, policy, l)?;
            let states = spectrum(&req, config.states)?;
            let audits: Vec<Value> = states
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let audit =
                        audit_eigenstate(s).map_err(|e| CliError::Numerical(e.to_string()))?;
                    Ok(json!({ "index": k, "energy": s.energy, "report": to_value(&audit) }))
                })
                .collect::<Result<_, CliError>>()?;
            cells.push(json!({
                "policy": to_value(&policy),
                "policy_index": i,
                "l": l,
                "states": audits,
            }));
        }
    }
    csv.columns = vec![
        "policy_index".into(),
        "l".into(),
        "index".into(),
        "extrapolated_strength [length^1/2]".into(),
    ];
    for cell in &cells {
        for s in cell["states"].as_array().into_iter().flatten() {
            csv.rows.push(vec![
                cell["policy_index"]
                    .as_u64()
                    .map_or(Cell::Blank, Cell::Index),
                cell["l"].as_u64().map_or(Cell::Blank, Cell::Index),
                s["index"].as_u64().map_or(Cell::Blank, Cell::Index),
                s["report"]["extrapolated_strength"].as_f64().into(),
            ]);
        }
    }
    Ok(Outcome {
        report: json!({ "provenance": provenance(config), "results": cells }),
        plots: Vec::new(),
        csv,
    })
}

pub fn run_solve(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut cells = Vec::new();
    let mut plots = Vec::new();
    let mut csv = Table::new(
        "solve",
        vec![
            "policy_index".into(),
            "l".into(),
            "index".into(),
            "E [energy]".into(),
            "node_count".into(),
        ],
    );
    for (i, &policy) in config.policies.iter().enumerate() {
        for &l in &config.l {
            let req = build_request(config, policy, l)?;
            let validated = req.validate()?;
            let states = spectrum(&req, config.states)?;
            let tag = cell_tag(i, &policy, l);
            plots.push(spectrum_table(&tag, &states));
            for (k, s) in states.iter().enumerate() {
                plots.push(wavefunction_table(&tag, k, s));
                csv.rows.push(vec![
                    i.into(),
                    l.into(),
                    k.into(),
                    s.energy.into(),
                    s.node_count.into(),
                ]);
            }
            let p = &req.potential;
            cells.push(json!({
                "policy": to_value(&policy),
                "l": l,
                "indicial": to_value(&validated.indicial),
                "seed": to_value(&validated.seed),
                "grid": to_value(&config.grid.resolve(p, &policy, config.cutoff)),
                "states": states.iter().enumerate().map(|(k, s)| state_value(k, s)).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(Outcome {
        report: json!({ "provenance": provenance(config), "results": cells }),
        plots,
        csv,
    })
}

/// The configuration with the sweep parameter set to `value`.
pub fn with_parameter(
    config: &ExperimentConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<ExperimentConfig, CliError> {
    let mut c = config.clone();
    let unsupported = || {
        Err(CliError::Config(format!(
            "sweep.parameter: `{}` does not apply to this configuration",
            parameter.name()
        )))
    };
    match parameter {
        SweepParameter::Chi | SweepParameter::RS => {
            let mut any = false;
            for policy in &mut c.policies {
                if let BoundaryPolicy::SaeMixing { chi, r_s, .. } = policy {
                    any = true;
                    if parameter == SweepParameter::Chi {
                        *chi = value;
                    } else {
                        *r_s = value;
                    }
                }
            }
            if !any {
                return unsupported();
            }
        }
        SweepParameter::V0 => match &mut c.potential {
            BuiltinKind::InverseSquare { v0 }
            | BuiltinKind::CoulombPlusInverseSquare { v0, .. } => *v0 = value,
            _ => return unsupported(),
        },
        SweepParameter::Z => match &mut c.potential {
            BuiltinKind::Coulomb { z } | BuiltinKind::CoulombPlusInverseSquare { z, .. } => {
                *z = value
            }
            _ => return unsupported(),
        },
        SweepParameter::Mass => c.mass = value,
        SweepParameter::Cutoff => c.cutoff = Some(value),
    }
    c.sweep = None;
    Ok(c)
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(format!(
                "{THREADS_VAR}: expected a positive integer, got `{raw}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker threads: {e}")))
}

type Solved = Result<Vec<Eigenstate>, SolveError>;

fn solve_cell(config: &ExperimentConfig, policy: BoundaryPolicy, l: u32) -> Solved {
    spectrum(&build_request(config, policy, l)?, config.states)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: the sweep command needs a [sweep] table".into()))?;
    let points: Vec<ExperimentConfig> = sweep
        .values
        .iter()
        .map(|&v| with_parameter(config, sweep.parameter, v))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize, u32)> = (0..points.len())
        .flat_map(|j| {
            config
                .l
                .iter()
                .flat_map(move |&l| (0..config.policies.len()).map(move |i| (j, i, l)))
        })
        .collect();
    let results: Vec<Solved> = worker_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(j, i, l)| solve_cell(&points[j], points[j].policies[i], l))
            .collect()
    });
    let mut cells = Vec::new();
    let mut plots = Vec::new();
    let mut csv = Table::new(
        "sweep",
        vec![
            "policy_index".into(),
            "l".into(),
            format!("{} [{}]", sweep.parameter.name(), sweep.parameter.unit()),
        ],
    );
    csv.columns
        .extend((0..config.states).map(|k| format!("E_{k} [energy]")));
    for (i, &policy) in config.policies.iter().enumerate() {
        for &l in &config.l {
            let tag = cell_tag(i, &policy, l);
            let mut table = Table::new(
                format!("sweep_{tag}"),
                vec![format!(
                    "{} [{}]",
                    sweep.parameter.name(),
                    sweep.parameter.unit()
                )],
            );
            table
                .columns
                .extend((0..config.states).map(|k| format!("E_{k} [energy]")));
            let mut entries = Vec::new();
            for (j, &value) in sweep.values.iter().enumerate() {
                let at = jobs
                    .iter()
                    .position(|&job| job == (j, i, l))
                    .expect("every cell was scheduled");
                let mut row = vec![Cell::from(value)];
                let entry = match &results[at] {
                    Ok(states) => {
                        row.extend(states.iter().map(|s| Cell::from(s.energy)));
                        json!({
                            "value": value,
                            "energies": states.iter().map(|s| s.energy).collect::<Vec<_>>(),
                        })
                    }
                    Err(e) => json!({ "value": value, "energies": [], "error": error_value(e) }),
                };
                let mut csv_row = vec![i.into(), l.into()];
                csv_row.extend(row.iter().copied());
                csv.rows.push(csv_row);
                table.rows.push(row);
                entries.push(entry);
            }
            plots.push(table);
            cells.push(json!({
                "policy": to_value(&policy),
                "l": l,
                "points": entries,
            }));
        }
    }
    Ok(Outcome {
        report: json!({
            "provenance": provenance(config),
            "parameter": sweep.parameter.name(),
            "results": cells,
        }),
        plots,
        csv,
    })
}

fn spectra_agree(a: &[Eigenstate], b: &[Eigenstate]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            (x.energy - y.energy).abs() <= AGREEMENT_REL * x.energy.abs().max(y.energy.abs())
        })
}

pub fn run_compare(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    if config.policies.len() < 2 {
        return Err(CliError::Config(format!(
            "policies: compare needs at least two policies, got {}",
            config.policies.len()
        )));
    }
    let p = potential(config)?;
    let jobs: Vec<(u32, usize)> = config
        .l
        .iter()
        .flat_map(|&l| (0..config.policies.len()).map(move |i| (l, i)))
        .collect();
    let results: Vec<Solved> = worker_pool()?.install(|| {
        jobs.par_iter()
            .map(|&(l, i)| solve_cell(config, config.policies[i], l))
            .collect()
    });
    let names: Vec<String> = config
        .policies
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{i}:{}", p.name()))
        .collect();
    let mut csv = Table::new("compare", vec!["l".into(), "index".into()]);
    csv.columns
        .extend(names.iter().map(|n| format!("E[{n}] [energy]")));
    let mut plots = Vec::new();
    let mut blocks = Vec::new();
    for &l in &config.l {
        let cells: Vec<&Solved> = (0..config.policies.len())
            .map(|i| &results[jobs.iter().position(|&j| j == (l, i)).expect("scheduled")])
            .collect();
        let rows = cells
            .iter()
            .filter_map(|c| c.as_ref().ok().map(Vec::len))
            .max()
            .unwrap_or(0);
        let mut table = Table::new(format!("compare_l{l}"), vec!["index".into()]);
        table
            .columns
            .extend(names.iter().map(|n| format!("E[{n}] [energy]")));
        let mut flags = Vec::new();
        for k in 0..rows {
            let energies: Vec<Option<f64>> = cells
                .iter()
                .map(|c| c.as_ref().ok().and_then(|s| s.get(k)).map(|s| s.energy))
                .collect();
            let present: Vec<usize> = (0..energies.len())
                .filter(|&i| energies[i].is_some())
                .collect();
            if present.len() < energies.len() {
                let absent: Vec<usize> = (0..energies.len())
                    .filter(|&i| energies[i].is_none())
                    .collect();
                flags.push(json!({ "index": k, "present_in": present, "absent_in": absent }));
            }
            let mut row = vec![Cell::from(k)];
            row.extend(energies.iter().map(|&e| Cell::from(e)));
            table.rows.push(row.clone());
            let mut csv_row = vec![Cell::from(l)];
            csv_row.extend(row);
            csv.rows.push(csv_row);
        }
        plots.push(table);
        let mut agreement = Vec::new();
        for a in 0..cells.len() {
            for b in a + 1..cells.len() {
                if let (Ok(x), Ok(y)) = (cells[a], cells[b]) {
                    agreement.push(json!({ "a": a, "b": b, "agree": spectra_agree(x, y) }));
                }
            }
        }
        let columns: Vec<Value> = config
            .policies
            .iter()
            .zip(&cells)
            .map(|(policy, cell)| {
                let grid = to_value(&config.grid.resolve(&p, policy, config.cutoff));
                match cell {
                    Ok(states) => json!({
                        "policy": to_value(policy),
                        "grid": grid,
                        "states": states.iter().enumerate().map(|(k, s)| state_value(k, s)).collect::<Vec<_>>(),
                    }),
                    Err(e) => json!({ "policy": to_value(policy), "grid": grid, "error": error_value(e) }),
                }
            })
            .collect();
        let indicial = match indicial_exponents(
            l as i64,
            if config.cutoff.is_some() {
                0.0
            } else {
                gamma_of(config, &p)
            },
        ) {
            Ok(res) => json!({ "p": to_value(&res.p), "regime": to_value(&res.regime) }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        blocks.push(json!({
            "l": l,
            "indicial": indicial,
            "policies": columns,
            "flags": flags,
            "agreement": agreement,
        }));
    }
    Ok(Outcome {
        report: json!({ "provenance": provenance(config), "results": blocks }),
        plots,
        csv,
    })
}
