use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Protocol phase in which a federated run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Setup,
    RoundBatch,
    LocalTraining,
    SoftLabels,
    Aggregation,
    Distillation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Phase::Setup => "setup",
            Phase::RoundBatch => "round-batch",
            Phase::LocalTraining => "local-training",
            Phase::SoftLabels => "soft-labels",
            Phase::Aggregation => "aggregation",
            Phase::Distillation => "distillation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A configuration field failed validation.
    #[error("configuration error at `{field}`: {constraint}")]
    InvalidField { field: String, constraint: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("round {round}, phase {phase}{}: {source}", client.map(|c| format!(", client {c}")).unwrap_or_default())]
    Phase {
        round: usize,
        phase: Phase,
        client: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn field(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn in_phase(self, round: usize, phase: Phase, client: Option<usize>) -> Self {
        Error::Phase {
            round,
            phase,
            client,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a configuration problem rather than a
    /// runtime or numeric failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidField { .. } => true,
            Error::Phase { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
