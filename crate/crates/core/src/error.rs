use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected} nodes, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Every importance weight was zero (or not finite) after the likelihood pass.
    #[error("importance weights underflowed to zero{}", component_suffix(*.component))]
    WeightUnderflow { component: Option<usize> },

    #[error("truncated transition exceeded {0} redraws without landing in [0, 1]")]
    TruncationExhausted(u64),

    #[error("filter failed at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn component_suffix(component: Option<usize>) -> String {
    match component {
        Some(j) => format!(" for component {j}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step { step, source: Box::new(self) }
    }
}
