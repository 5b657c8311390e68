//! Command-line front end: end-to-end pipelines (subspace definition, loss
//! computation, representation, topological analysis, quantification,
//! property evaluation), the wave-speed sweep, the classifier demo, and a
//! brute-force self-check.

pub mod check;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

use lossscape_core::directions::DirectionsError;
use lossscape_core::field::FieldError;
use lossscape_core::metrics::MetricsError;
use lossscape_core::models::{ModelError, TrainError};
use lossscape_core::sampler::SamplerError;
use lossscape_core::topology::TopologyError;

/// Process exit codes: 0 success, 2 configuration error, 3 numeric failure,
/// 4 I/O failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            ModelError::Io(inner) => CliError::Io(inner.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Diverged { .. } => CliError::Numeric(e.to_string()),
            TrainError::Model(inner) => inner.into(),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Io(inner) => CliError::Io(inner.to_string()),
            FieldError::MetaMissing(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::AllNonFinite => CliError::Numeric(e.to_string()),
            SamplerError::Model(inner) => inner.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<DirectionsError> for CliError {
    fn from(e: DirectionsError) -> Self {
        match e {
            DirectionsError::Model(inner) => inner.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Model(inner) => inner.into(),
            MetricsError::Directions(inner) => inner.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
