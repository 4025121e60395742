use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::json::format_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Blank,
    Index(u64),
    Value(f64),
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Blank => None,
            Cell::Index(i) => Some(i as f64),
            Cell::Value(x) => Some(x),
        }
    }

    fn render(self) -> String {
        match self {
            Cell::Blank => String::new(),
            Cell::Index(i) => i.to_string(),
            Cell::Value(x) => format_f64(x),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Value(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Blank, Cell::Value)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Index(i as u64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Index(i.into())
    }
}

/// Plain delimited columns with one header line. Absent values are blank.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Column names with units, e.g. `r [length]`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = (0..self.columns.len())
                .map(|i| row.get(i).map_or(String::new(), |c| c.render()))
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Writes each table to `dir/<name>.csv`, creating `dir`. Returns the paths
/// in table order.
pub fn emit_plot_data(tables: &[Table], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path, source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.render()).map_err(|e| io(&path, e))?;
            Ok(path)
        })
        .collect()
}
