//! Scenario runner and figure-reproduction harness for `ionparity`.

pub mod config;
pub mod output;
pub mod runner;
pub mod scenarios;

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Simulation(#[from] ionparity::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown scenario `{0}` (see `list`)")]
    UnknownScenario(String),
}

/// A built-in scenario name or a path to a TOML file.
pub fn resolve(target: &str) -> Result<config::ScenarioConfig, Error> {
    if let Some(cfg) = scenarios::load(target) {
        return Ok(cfg?);
    }
    let path = Path::new(target);
    if path.exists() {
        return Ok(config::ScenarioConfig::from_path(path)?);
    }
    Err(Error::UnknownScenario(target.to_string()))
}

/// Runs a scenario and writes its CSV files under `out_dir`.
pub fn run_and_write(cfg: &config::ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let runs = runner::run_scenario(cfg)?;
    output::write_outputs(&cfg.name, &runs, cfg.output.fidelity_csv, out_dir)
}
