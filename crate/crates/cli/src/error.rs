use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{0}")]
    Numerical(tdpt_core::Error),

    #[error("{0}")]
    Library(tdpt_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("missing prerequisite output `{0}`; run the producing subcommand first")]
    MissingOutput(PathBuf),

    #[error("{failed} of {total} sweep runs failed")]
    Sweep { failed: usize, total: usize },
}

impl From<tdpt_core::Error> for CliError {
    fn from(e: tdpt_core::Error) -> Self {
        match e {
            tdpt_core::Error::NumericalPolicy { .. } => CliError::Numerical(e),
            other => CliError::Library(other),
        }
    }
}

impl CliError {
    /// 2 for config errors, 3 for numerical-policy violations, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}
