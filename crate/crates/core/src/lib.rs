//! Recover color distributions from black-box respondents by embedding them
//! in sampling algorithms over the HSL cube, and measure how well the
//! recovered samples converge and align with a reference.

pub mod chain_log;
pub mod color;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kde;
pub mod reference;
pub mod render;
pub mod report;
pub mod respondent;
pub mod run;
pub mod sampler;
pub mod seeds;

pub use color::{canonicalize, hsl_to_rgb, Dimension, HslColor};
pub use error::DomainError;
pub use grid::{bin_index, histogram, GridHistogram};
pub use kde::{kde, KdeEstimate, KdeGrid, Projection};
