//! File formats, reports and command implementations for the `cleavelab`
//! binary. The numerical work lives in `cleavelab-core`.

pub mod commands;
pub mod config;
pub mod output;

use cleavelab_core::Error as CoreError;

/// Failure classes, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("inadmissible model: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Inadmissible(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InadmissibleModel(m) => CliError::Inadmissible(m),
            CoreError::Degenerate(_) | CoreError::CoincidentAtoms(..) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}
