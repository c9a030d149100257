use thiserror::Error;

/// Errors raised by the color domain: coordinates, grids and density estimates.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("non-finite coordinate ({h}, {s}, {l})")]
    InvalidCoordinate { h: f64, s: f64, l: f64 },
    #[error("color ({h}, {s}, {l}) lies outside the HSL cube")]
    OutOfRange { h: i64, s: i64, l: i64 },
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("grid mismatch: expected {expected} bins, got {actual}")]
    GridMismatch { expected: usize, actual: usize },
    #[error("invalid histogram mass {0}: masses must be finite and nonnegative with a positive total")]
    InvalidMass(f64),
    #[error("projection needs two distinct dimensions, got {0} twice")]
    InvalidProjection(crate::color::Dimension),
    #[error("grid step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
}
