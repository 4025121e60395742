use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radialis_cli::{
    run_classify, run_compare, run_indicial, run_residual, run_solve, run_sweep, write_outcome,
    CliError, ExperimentConfig, Format, Overrides,
};
use radialis_core::BoundaryPolicy;

#[derive(Parser)]
#[command(
    name = "radialis",
    version,
    about = "Radial Schrödinger equation laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the potential by its behavior at the origin.
    Classify(Common),
    /// Frobenius exponents and admissible behaviors.
    Indicial(IndicialArgs),
    /// Point-source diagnostic of solved states or of a `[probe]` function.
    Residual(Common),
    /// Bound states for every policy and angular momentum.
    Solve(Common),
    /// Spectra along the `[sweep]` parameter.
    Sweep(Common),
    /// Spectra under two or more policies side by side.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report destination; standard output by default.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Relative energy tolerance of the bisection.
    #[arg(long)]
    tol_energy: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Override any config key, e.g. `--set potential.z=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct IndicialArgs {
    #[command(flatten)]
    common: Common,
    /// Angular momentum; replaces the configured list.
    #[arg(long)]
    l: Option<u32>,
    /// `γ = 2mV₀`; replaces the value implied by the potential.
    #[arg(long)]
    gamma: Option<f64>,
    /// Replaces the configured policies.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// SAE mixing angle.
    #[arg(long, default_value_t = 0.0)]
    chi: f64,
    /// SAE scale.
    #[arg(long, default_value_t = 1.0)]
    r_s: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Dirichlet,
    SquareIntegrableOnly,
    SaeMixing,
}

impl Common {
    fn load(&self, extra: Vec<String>) -> Result<ExperimentConfig, CliError> {
        let overrides = Overrides {
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            }),
            tol_energy: self.tol_energy,
            grid_points: self.grid_points,
            r_max: self.r_max,
            set: extra.into_iter().chain(self.set.iter().cloned()).collect(),
        };
        ExperimentConfig::load_file(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (config, outcome) = match &cli.command {
        Command::Indicial(args) => {
            // placeholder potential for a bare `--gamma`
            let extra = match (args.gamma, &args.common.config) {
                (Some(_), None) => vec![
                    "potential.kind=inverse_square".into(),
                    "potential.v0=0.0".into(),
                ],
                _ => Vec::new(),
            };
            let mut config = args.common.load(extra)?;
            if let Some(l) = args.l {
                config.l = vec![l];
            }
            if let Some(policy) = args.policy {
                config.policies = vec![match policy {
                    PolicyArg::Dirichlet => BoundaryPolicy::Dirichlet,
                    PolicyArg::SquareIntegrableOnly => BoundaryPolicy::SquareIntegrableOnly,
                    PolicyArg::SaeMixing => BoundaryPolicy::sae(args.chi, args.r_s),
                }];
                config.validate()?;
            }
            let outcome = run_indicial(&config, args.gamma)?;
            (config, outcome)
        }
        Command::Classify(c) => {
            let config = c.load(Vec::new())?;
            let outcome = run_classify(&config)?;
            (config, outcome)
        }
        Command::Residual(c) => {
            let config = c.load(Vec::new())?;
            let outcome = run_residual(&config)?;
            (config, outcome)
        }
        Command::Solve(c) => {
            let config = c.load(Vec::new())?;
            let outcome = run_solve(&config)?;
            (config, outcome)
        }
        Command::Sweep(c) => {
            let config = c.load(Vec::new())?;
            let outcome = run_sweep(&config)?;
            (config, outcome)
        }
        Command::Compare(c) => {
            let config = c.load(Vec::new())?;
            let outcome = run_compare(&config)?;
            (config, outcome)
        }
    };
    write_outcome(&outcome, &config.output, &mut std::io::stdout().lock())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radialis: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
