use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RespondentError;
use crate::color::{Dimension, HslColor, HUE_LEVELS, LATTICE_SIZE, PERCENT_LEVELS};
use crate::grid::{bin_index, linear_index, GridHistogram, GRID_BINS};

/// One hue-wrapped axis-aligned Gaussian bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    /// Center as (hue, saturation, lightness).
    pub mean: [f64; 3],
    /// Per-dimension standard deviations.
    pub stddev: [f64; 3],
}

/// Ground-truth color distribution for the synthetic oracle: a mixture of
/// Gaussians whose hue distance is measured around the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub components: Vec<GaussianComponent>,
}

impl TargetSpec {
    pub fn gaussian(mean: [f64; 3], stddev: [f64; 3]) -> Self {
        Self { components: vec![GaussianComponent { weight: 1.0, mean, stddev }] }
    }

    /// A Gaussian narrow enough that all lattice mass sits on `c`, while every
    /// conditional still points at `c`'s coordinates.
    pub fn point_mass(c: HslColor) -> Self {
        Self::gaussian(c.as_reals(), [1e-3; 3])
    }

    pub fn validate(&self) -> Result<(), RespondentError> {
        let bad = |msg: String| Err(RespondentError::DegenerateTarget(msg));
        if self.components.is_empty() {
            return bad("no mixture components".into());
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return bad(format!("component {i}: weight {} must be positive", c.weight));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return bad(format!("component {i}: mean must be finite"));
            }
            if c.stddev.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return bad(format!("component {i}: stddevs must be positive"));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-6 {
            return bad(format!("weights sum to {total}, not 1"));
        }
        Ok(())
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A target tabulated on every integer lattice point, in log space.
#[derive(Debug)]
pub struct LatticeTarget {
    log_density: Vec<f64>,
    log_max: f64,
    log_total: f64,
    cumulative: OnceLock<Vec<f64>>,
}

impl LatticeTarget {
    pub fn from_spec(spec: &TargetSpec) -> Result<Self, RespondentError> {
        spec.validate()?;
        // each component factorizes over dimensions
        let factors: Vec<[Vec<f64>; 3]> = spec
            .components
            .iter()
            .map(|c| {
                let axis = |dim: Dimension| -> Vec<f64> {
                    let i = dim.index();
                    (0..dim.levels())
                        .map(|v| {
                            let d = match dim {
                                Dimension::Hue => circular_distance(v as f64, c.mean[0]),
                                _ => v as f64 - c.mean[i],
                            };
                            let z = d / c.stddev[i];
                            -0.5 * z * z - c.stddev[i].ln()
                        })
                        .collect()
                };
                let mut h = axis(Dimension::Hue);
                let w = c.weight.ln();
                h.iter_mut().for_each(|v| *v += w);
                [h, axis(Dimension::Saturation), axis(Dimension::Lightness)]
            })
            .collect();
        let mut log_density = Vec::with_capacity(LATTICE_SIZE);
        for h in 0..HUE_LEVELS {
            for s in 0..PERCENT_LEVELS {
                for l in 0..PERCENT_LEVELS {
                    let v = if factors.len() == 1 {
                        factors[0][0][h] + factors[0][1][s] + factors[0][2][l]
                    } else {
                        log_sum_exp(factors.iter().map(|f| f[0][h] + f[1][s] + f[2][l]))
                    };
                    log_density.push(v);
                }
            }
        }
        Self::from_log_table(log_density)
    }

    /// Tabulates an arbitrary nonnegative density.
    pub fn from_density_fn(density: impl Fn(HslColor) -> f64) -> Result<Self, RespondentError> {
        let table = (0..LATTICE_SIZE)
            .map(|i| {
                let d = density(HslColor::from_lattice_index(i));
                if d > 0.0 {
                    d.ln()
                } else if d == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::NAN
                }
            })
            .collect();
        Self::from_log_table(table)
    }

    fn from_log_table(log_density: Vec<f64>) -> Result<Self, RespondentError> {
        if log_density.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(RespondentError::DegenerateTarget("density must be finite and nonnegative".into()));
        }
        let log_max = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if log_max == f64::NEG_INFINITY {
            return Err(RespondentError::DegenerateTarget("density is zero everywhere".into()));
        }
        let log_total = log_max + log_density.iter().map(|v| (v - log_max).exp()).sum::<f64>().ln();
        Ok(Self { log_density, log_max, log_total, cumulative: OnceLock::new() })
    }

    /// Unnormalized log density; `-inf` where the density is zero.
    pub fn log_density(&self, c: HslColor) -> f64 {
        self.log_density[c.lattice_index()]
    }

    /// Density relative to the lattice maximum, in `[0, 1]`.
    pub fn relative_density(&self, c: HslColor) -> f64 {
        (self.log_density(c) - self.log_max).exp()
    }

    /// Normalized lattice probability of a single color.
    pub fn probability(&self, c: HslColor) -> f64 {
        (self.log_density(c) - self.log_total).exp()
    }

    /// Exact conditional distribution of `dim` given the other two coordinates
    /// of `at`, indexed by the dimension's integer value. Falls back to uniform
    /// when every candidate has zero density.
    pub fn conditional(&self, at: HslColor, dim: Dimension) -> Vec<f64> {
        let logs: Vec<f64> =
            (0..dim.levels()).map(|v| self.log_density(at.with(dim, v as i64))).collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return vec![1.0 / dim.levels() as f64; dim.levels()];
        }
        let weights: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Exact draw from the normalized lattice distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HslColor {
        let cumulative = self.cumulative.get_or_init(|| {
            let mut acc = 0.0;
            self.log_density
                .iter()
                .map(|v| {
                    acc += (v - self.log_max).exp();
                    acc
                })
                .collect()
        });
        let total = *cumulative.last().expect("lattice is nonempty");
        let u = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(LATTICE_SIZE - 1);
        HslColor::from_lattice_index(idx)
    }

    /// Probability mass of the lattice distribution on each grid bin.
    pub fn grid_histogram(&self) -> GridHistogram {
        let mut masses = vec![0.0; GRID_BINS];
        for (i, v) in self.log_density.iter().enumerate() {
            let c = HslColor::from_lattice_index(i);
            masses[linear_index(bin_index(c))] += (v - self.log_max).exp();
        }
        GridHistogram::from_masses(masses).expect("target has positive mass")
    }

    /// The lattice point of highest density (lowest lattice index on ties).
    pub fn mode(&self) -> HslColor {
        let idx = self.log_density.iter().position(|&v| v == self.log_max).expect("max is attained");
        HslColor::from_lattice_index(idx)
    }
}
