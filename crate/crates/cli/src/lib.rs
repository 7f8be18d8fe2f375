//! Batch front end for `quadopt-core`.
//!
//! Every figure of the model is a scenario that turns a [`RunConfig`] into
//! CSV/JSON tables plus a `summary.json`. Files carry a `#` header (JSON
//! files a `metadata` object) with the tool version, seed, units and the
//! fully resolved parameters.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::PathBuf;

pub use config::{load_config, validate_config, ConfigError, Format, Overrides, Params, RunConfig, Scenario};
pub use output::{Artifacts, Metadata, Table};

/// `<crate version> (<git describe>)`.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("QUADOPT_GIT_DESCRIBE"), ")");

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Numeric(#[from] quadopt_core::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for anything the user can fix in the configuration or inputs, 3 for
    /// failures inside the numerics.
    pub fn exit_code(&self) -> u8 {
        use quadopt_core::Error as E;
        match self {
            RunError::Config(_) | RunError::Input(_) | RunError::Io { .. } => EXIT_CONFIG,
            RunError::Numeric(
                E::InvalidParameter { .. }
                | E::InvalidDimension(_)
                | E::DimensionMismatch(_)
                | E::ModeIndex { .. }
                | E::TruncationInsufficient { .. },
            ) => EXIT_CONFIG,
            RunError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub artifacts: Artifacts,
}

pub fn metadata(config: &RunConfig) -> Metadata {
    Metadata {
        tool: "quadopt".into(),
        version: VERSION.into(),
        scenario: config.scenario.name().into(),
        seed: config.seed,
        units: config.scenario.units().into(),
        parameters: config.params_json(),
    }
}

/// Runs the scenario without touching the disk, on a dedicated pool when a
/// thread count is set.
pub fn execute(config: &RunConfig) -> Result<Artifacts, RunError> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Input(format!("thread pool: {e}")))?
            .install(|| scenarios::run(config)),
        None => scenarios::run(config),
    }
}

/// Runs the scenario and writes its files under `config.out`. Nothing is
/// left behind on failure.
pub fn run_scenario(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let artifacts = execute(config)?;
    let files = output::render(&artifacts, &metadata(config), &config.formats);
    let files = output::write_files(&config.out, &files).map_err(|(source, path)| RunError::Io { path, source })?;
    Ok(RunOutcome { files, artifacts })
}
