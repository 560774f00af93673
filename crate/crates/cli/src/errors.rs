//! Error taxonomy mapped onto process exit codes.

use stepuq_core::judge::client::ClientError;
use stepuq_core::judge::SampleError;
use thiserror::Error;

/// Exit codes: 1 usage, 2 data, 3 transport.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl From<stepuq_core::io::IoError> for CliError {
    fn from(e: stepuq_core::io::IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<stepuq_core::ingest::IngestError> for CliError {
    fn from(e: stepuq_core::ingest::IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<stepuq_core::metrics::MetricError> for CliError {
    fn from(e: stepuq_core::metrics::MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match &e {
            ClientError::Transport(_) | ClientError::Http { .. } => {
                CliError::Transport(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        let SampleError::Failed { source, .. } = &e;
        match source {
            ClientError::Transport(_) | ClientError::Http { .. } => {
                CliError::Transport(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
