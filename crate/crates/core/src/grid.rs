//! The coarse 18×10×10 H-S-L grid on which distributions are compared.

use serde::{Deserialize, Serialize};

use crate::color::HslColor;
use crate::error::DomainError;

pub const HUE_BINS: usize = 18;
pub const SAT_BINS: usize = 10;
pub const LIGHT_BINS: usize = 10;
pub const GRID_BINS: usize = HUE_BINS * SAT_BINS * LIGHT_BINS;

pub const HUE_BIN_WIDTH: u16 = 20;
pub const PERCENT_BIN_WIDTH: u16 = 10;

/// Grid cell `(i, j, k)` holding a color. The closed upper faces `s = 100`
/// and `l = 100` belong to the last bins.
pub fn bin_index(c: HslColor) -> (usize, usize, usize) {
    let i = ((c.h() / HUE_BIN_WIDTH) as usize).min(HUE_BINS - 1);
    let j = ((c.s() / PERCENT_BIN_WIDTH) as usize).min(SAT_BINS - 1);
    let k = ((c.l() / PERCENT_BIN_WIDTH) as usize).min(LIGHT_BINS - 1);
    (i, j, k)
}

/// Lexicographic linear index of a bin triple.
pub fn linear_index((i, j, k): (usize, usize, usize)) -> usize {
    (i * SAT_BINS + j) * LIGHT_BINS + k
}

pub fn bin_triple(linear: usize) -> (usize, usize, usize) {
    (linear / (SAT_BINS * LIGHT_BINS), (linear / LIGHT_BINS) % SAT_BINS, linear % LIGHT_BINS)
}

/// Integer center of a bin: lower edge plus half the bin width.
pub fn bin_center((i, j, k): (usize, usize, usize)) -> HslColor {
    let h = i as u16 * HUE_BIN_WIDTH + HUE_BIN_WIDTH / 2;
    let s = j as u16 * PERCENT_BIN_WIDTH + PERCENT_BIN_WIDTH / 2;
    let l = k as u16 * PERCENT_BIN_WIDTH + PERCENT_BIN_WIDTH / 2;
    HslColor::new(h, s, l).expect("bin centers lie inside the cube")
}

/// Normalized probability mass over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHistogram {
    bins: Vec<f64>,
    sample_count: usize,
}

impl GridHistogram {
    /// Builds a histogram from raw nonnegative masses in `(i, j, k)` lexicographic
    /// order, normalizing them to sum to one.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self, DomainError> {
        if masses.len() != GRID_BINS {
            return Err(DomainError::GridMismatch { expected: GRID_BINS, actual: masses.len() });
        }
        if let Some(&bad) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(DomainError::InvalidMass(bad));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(DomainError::InvalidMass(total));
        }
        let bins = masses.into_iter().map(|m| m / total).collect();
        Ok(Self { bins, sample_count: 0 })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn mass(&self, bin: (usize, usize, usize)) -> f64 {
        self.bins[linear_index(bin)]
    }

    /// Number of samples the histogram was built from; zero when it came from
    /// explicit masses.
    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

/// Fraction of samples falling in each grid bin.
pub fn histogram(samples: &[HslColor]) -> Result<GridHistogram, DomainError> {
    if samples.is_empty() {
        return Err(DomainError::EmptySampleSet);
    }
    let mut counts = vec![0usize; GRID_BINS];
    for &c in samples {
        counts[linear_index(bin_index(c))] += 1;
    }
    let n = samples.len() as f64;
    Ok(GridHistogram {
        bins: counts.into_iter().map(|c| c as f64 / n).collect(),
        sample_count: samples.len(),
    })
}
