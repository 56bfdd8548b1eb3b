// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors produced by the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an input contract (shape, finiteness, parameter range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine failed (e.g. Cholesky at maximum jitter, non-finite objective).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input is structurally valid but degenerate for the requested statistic.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// No candidate locations remain to select from.
    #[error("exhausted candidates: {0}")]
    ExhaustedCandidates(String),

    /// Query budget of an oracle is spent.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
