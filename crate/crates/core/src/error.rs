// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors produced by the denoising, streaming and monitoring routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TvError {
    /// A caller-side precondition was not met (lengths, ranges, orderings).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A streamed sample was rejected before touching the state.
    #[error("rejected sample: {0}")]
    RejectedSample(String),
    /// An update produced non-finite values; the state was left untouched.
    #[error("corrupted state: {0}")]
    CorruptedState(String),
    /// RVE is undefined when the reference series has zero variance.
    #[error("undefined RVE: reference sigma series is constant")]
    UndefinedRve,
    /// A configuration failed validation; one entry per offending field.
    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
}

pub type Result<T> = std::result::Result<T, TvError>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(TvError::Contract(msg.into()))
}
