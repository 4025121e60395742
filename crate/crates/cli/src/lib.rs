//! Config-driven front end for `radialis`: experiment files, the six
//! commands, deterministic JSON reports and plot-ready text.

pub mod commands;
pub mod config;
pub mod error;
pub mod json;
pub mod plot;

use std::io::Write;
use std::path::Path;

pub use commands::{
    build_request, run_classify, run_compare, run_indicial, run_residual, run_solve, run_sweep,
    with_parameter, Outcome, THREADS_VAR,
};
pub use config::{
    ExperimentConfig, Format, OutputSpec, Overrides, ProbeSpec, SweepParameter, SweepSpec,
};
pub use error::CliError;
pub use plot::{emit_plot_data, Cell, Table};

/// The report text in the configured format.
pub fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Json => json::to_string(&outcome.report),
        Format::Csv => outcome.csv.render(),
    }
}

/// Writes the report to the configured path (or `stdout`) and the plot
/// tables to the configured directory.
pub fn write_outcome(
    outcome: &Outcome,
    output: &OutputSpec,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = render(outcome, output.format);
    match &output.path {
        Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?,
    }
    if let Some(dir) = &output.plot_dir {
        emit_plot_data(&outcome.plots, Path::new(dir))?;
    }
    Ok(())
}
