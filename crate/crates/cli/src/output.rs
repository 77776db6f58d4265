//! CSV tables and JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

/// A CSV cell: numbers get 17 significant digits.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let ctx = || format!("writing {}", path.display());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| CliError::Io {
                context: ctx(),
                source: e.into(),
            })?;
        let wrap = |e: csv::Error| CliError::Io {
            context: ctx(),
            source: e.into(),
        };
        w.write_record(&self.header).map_err(wrap)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(wrap)?;
        }
        w.flush().map_err(CliError::io(ctx()))
    }
}

/// Everything one experiment produces.
pub struct Artifacts {
    pub experiment: &'static str,
    pub summary_line: String,
    pub summary: Value,
    pub tables: Vec<Table>,
}

/// Write the tables and `<experiment>.json`; returns the written paths.
pub fn write_all(dir: &Path, art: &Artifacts, config_hash: &str, seed: Option<u64>) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let mut written = Vec::new();
    for t in &art.tables {
        let path = dir.join(format!("{}.csv", t.name));
        t.write(&path)?;
        written.push(path);
    }
    let sidecar = json!({
        "schema": crate::config::SCHEMA,
        "experiment": art.experiment,
        "config_hash": config_hash,
        "seed": seed,
        "artifacts": art.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
        "summary": art.summary,
        "line": art.summary_line,
    });
    let path = dir.join(format!("{}.json", art.experiment));
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&path, text + "\n").map_err(CliError::io(format!("writing {}", path.display())))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI, 1e16 + 2.0] {
            let s = Cell::Num(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert!(!s.contains(','));
        }
        assert_eq!(Cell::Num(f64::NAN).render(), "NaN");
    }
}
