//! Convergence diagnostics and alignment metrics over chain outputs.

mod alignment;
mod rhat;

use thiserror::Error;

pub use alignment::{
    build_alignment_report, find_reference, hellinger, hellinger_masses, mode_distance, mode_of, AlignmentOptions,
    AlignmentReport, AlignmentRow, HueMetric, ProgressPoint, Progression,
};
pub use rhat::{gelman_rubin, rhat_components, rhat_trace, rhat_vector, Rhat, RhatTrace};

/// Convergence threshold conventionally used for R-hat.
pub const RHAT_THRESHOLD: f64 = 1.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("R-hat needs at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("R-hat needs at least 2 samples per chain, got {0}")]
    ChainTooShort(usize),
    #[error("chains must have equal length: expected {expected}, got {actual}")]
    UnequalLengths { expected: usize, actual: usize },
    #[error("no reference histogram for object {0:?}")]
    MissingReference(String),
}
