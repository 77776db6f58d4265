//! Command-line front end for `magflow`: config loading, experiment dispatch
//! and artifact writing.

pub mod config;
pub mod error;
pub mod output;
mod run;

use std::path::{Path, PathBuf};

pub use config::{Experiment, Prepared, RunConfig, SCHEMA};
pub use error::{CliError, Violation};
pub use output::Artifacts;

/// Result of a successful invocation.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub written: Vec<PathBuf>,
    pub config_hash: String,
}

/// Load `config_path`, run `experiment` and write artifacts under `out`
/// (or the config's `output.dir`, or `./out`).
pub fn run(experiment: Experiment, config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(config_path).map_err(CliError::io(format!("reading {}", config_path.display())))?;
    let prepared = config::load(&text, experiment, seed).map_err(CliError::Config)?;
    let dir = match (out, &prepared.config.output.dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("out"),
    };
    let artifacts = run::dispatch(&prepared, experiment)?;
    let config_hash = prepared.config_hash();
    let written = output::write_all(&dir, &artifacts, &config_hash, prepared.config.seed)?;
    Ok(Outcome {
        artifacts,
        written,
        config_hash,
    })
}
