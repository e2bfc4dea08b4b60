//! Subcommands of the `qdelta` binary.
//!
//! Every run writes `config_echo.txt` (the canonical config preceded by a
//! `# sha256` comment) into the output directory next to its results:
//!
//! | subcommand    | outputs                          |
//! |---------------|----------------------------------|
//! | `count`       | `count.json`                     |
//! | `expsum`      | `expsum.csv`                     |
//! | `density`     | `density.csv`, `density.json`    |
//! | `delta-check` | `delta_check.csv`                |
//! | `compare`     | `compare.csv`, `report.json`     |
//!
//! CSV columns are fixed by [`schema`].

pub mod commands;
pub mod schema;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qdelta::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Schema(#[from] schema::SchemaError),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
}

impl CliError {
    /// 0 success, 1 tolerance failure, 2 config error, 3 resource bound.
    pub fn exit_code(&self) -> i32 {
        use qdelta::Error as E;
        match self {
            CliError::Core(E::Config(_) | E::MissingField(_) | E::Precondition(_) | E::Degenerate | E::OddCrossTerm { .. }) => 2,
            CliError::Core(E::BoundExceeded { .. } | E::Overflow(_) | E::NoStabilization { .. }) => 3,
            CliError::Core(E::Numerical(_)) | CliError::Tolerance(_) | CliError::Schema(_) => 1,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub config_path: PathBuf,
    pub config: qdelta::Config,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub deterministic: bool,
}

impl RunConfig {
    pub fn load(config_path: PathBuf, out_dir: PathBuf, threads: Option<usize>, deterministic: bool) -> CliResult<Self> {
        let text = std::fs::read_to_string(&config_path)
            .map_err(|e| qdelta::Error::Config(format!("{}: {e}", config_path.display())))?;
        let config = text.parse()?;
        Ok(Self { config_path, config, out_dir, threads, deterministic })
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.config.echo().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
