//! Two-dimensional Gaussian kernel density estimates on a projection of the
//! HSL cube. Hue is treated as a linear axis.

use serde::{Deserialize, Serialize};

use crate::color::{Dimension, HslColor};
use crate::error::DomainError;

/// Kernel contributions beyond this many bandwidths are dropped (< e^-32 relative).
const KERNEL_CUTOFF: f64 = 8.0;

/// Which pair of dimensions to project onto, horizontal axis first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub x: Dimension,
    pub y: Dimension,
}

impl Projection {
    pub const HUE_SATURATION: Projection = Projection { x: Dimension::Hue, y: Dimension::Saturation };
    pub const HUE_LIGHTNESS: Projection = Projection { x: Dimension::Hue, y: Dimension::Lightness };
    pub const SATURATION_LIGHTNESS: Projection =
        Projection { x: Dimension::Saturation, y: Dimension::Lightness };

    pub fn new(x: Dimension, y: Dimension) -> Result<Self, DomainError> {
        if x == y {
            return Err(DomainError::InvalidProjection(x));
        }
        Ok(Self { x, y })
    }
}

/// Evaluation grid settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeGrid {
    /// Spacing between grid points, in HSL units.
    pub step: f64,
    /// Extra margin added beyond the cube on each side of both axes.
    pub padding: f64,
}

impl Default for KdeGrid {
    fn default() -> Self {
        Self { step: 1.0, padding: 0.0 }
    }
}

/// Axis span of a dimension: hue covers `[0, 360)`, the others `[0, 100]`.
fn axis_points(dim: Dimension, grid: KdeGrid) -> Vec<f64> {
    let (lo, hi, closed) = match dim {
        Dimension::Hue => (0.0, 360.0, false),
        _ => (0.0, 100.0, true),
    };
    let start = lo - grid.padding;
    let end = hi + grid.padding;
    let mut points = Vec::new();
    let mut n = 0usize;
    loop {
        let v = start + n as f64 * grid.step;
        let inside = if closed || grid.padding > 0.0 { v <= end + 1e-9 } else { v < end - 1e-9 };
        if !inside {
            break;
        }
        points.push(v);
        n += 1;
    }
    points
}

/// Density values on a regular 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    pub projection: Projection,
    pub bandwidth: f64,
    pub step: f64,
    /// Horizontal grid coordinates.
    pub xs: Vec<f64>,
    /// Vertical grid coordinates.
    pub ys: Vec<f64>,
    /// Row-major densities, `density[iy * xs.len() + ix]`.
    pub density: Vec<f64>,
}

impl KdeEstimate {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.xs.len() + ix]
    }

    /// Riemann sum of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.step * self.step
    }

    /// Grid coordinates of the largest density value.
    pub fn argmax(&self) -> (f64, f64) {
        let (idx, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        (self.xs[idx % self.xs.len()], self.ys[idx / self.xs.len()])
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }
}

/// Product-Gaussian kernel density of the projected samples.
pub fn kde(
    samples: &[HslColor],
    bandwidth: f64,
    projection: Projection,
    grid: KdeGrid,
) -> Result<KdeEstimate, DomainError> {
    if samples.is_empty() {
        return Err(DomainError::EmptySampleSet);
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(DomainError::InvalidBandwidth(bandwidth));
    }
    if !(grid.step.is_finite() && grid.step > 0.0) || !(grid.padding.is_finite() && grid.padding >= 0.0) {
        return Err(DomainError::InvalidStep(grid.step));
    }
    let projection = Projection::new(projection.x, projection.y)?;
    let xs = axis_points(projection.x, grid);
    let ys = axis_points(projection.y, grid);
    let mut density = vec![0.0; xs.len() * ys.len()];

    let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth * bandwidth * samples.len() as f64);
    let reach = KERNEL_CUTOFF * bandwidth;
    let window = |axis: &[f64], centre: f64| -> Vec<(usize, f64)> {
        let first = ((centre - reach - axis[0]) / grid.step).ceil().max(0.0) as usize;
        let last = (((centre + reach - axis[0]) / grid.step).floor() as isize).min(axis.len() as isize - 1);
        if last < first as isize {
            return Vec::new();
        }
        (first..=last as usize)
            .map(|i| {
                let z = (axis[i] - centre) / bandwidth;
                (i, (-0.5 * z * z).exp())
            })
            .collect()
    };

    for c in samples {
        let x = c.get(projection.x) as f64;
        let y = c.get(projection.y) as f64;
        let wx = window(&xs, x);
        for (iy, ky) in window(&ys, y) {
            let row = &mut density[iy * xs.len()..(iy + 1) * xs.len()];
            for &(ix, kx) in &wx {
                row[ix] += norm * kx * ky;
            }
        }
    }

    Ok(KdeEstimate { projection, bandwidth, step: grid.step, xs, ys, density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hsl(h: u16, s: u16, l: u16) -> HslColor {
        HslColor::new(h, s, l).unwrap()
    }

    #[test]
    fn single_sample_peaks_at_its_location() {
        let est = kde(&[hsl(50, 50, 20)], 1.0, Projection::HUE_SATURATION, KdeGrid::default()).unwrap();
        assert_eq!(est.argmax(), (50.0, 50.0));
        assert_eq!(est.xs.len(), 360);
        assert_eq!(est.ys.len(), 101);
    }

    #[test]
    fn unit_distance_ratio_is_exp_minus_half() {
        let est = kde(&[hsl(50, 50, 20)], 1.0, Projection::HUE_SATURATION, KdeGrid::default()).unwrap();
        let ratio = est.at(51, 50) / est.at(50, 50);
        assert!((ratio - 0.6065306597126334).abs() < 1e-12, "{ratio}");
        let ratio = est.at(50, 49) / est.at(50, 50);
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn two_samples_are_mirror_symmetric() {
        let samples = [hsl(40, 50, 0), hsl(60, 50, 0)];
        let est = kde(&samples, 1.0, Projection::HUE_SATURATION, KdeGrid::default()).unwrap();
        for iy in 0..est.ys.len() {
            for d in 0..30 {
                let a = est.at(50 - d, iy);
                let b = est.at(50 + d, iy);
                assert!((a - b).abs() <= 1e-15 * a.max(1.0), "asymmetric at d={d}");
            }
        }
    }

    #[test]
    fn interior_mass_integrates_to_one() {
        let samples = [hsl(100, 40, 40), hsl(200, 60, 30), hsl(205, 62, 70)];
        for projection in [Projection::HUE_SATURATION, Projection::SATURATION_LIGHTNESS] {
            let est = kde(&samples, 1.0, projection, KdeGrid::default()).unwrap();
            assert!((est.integral() - 1.0).abs() < 0.02, "{}", est.integral());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = KdeGrid::default();
        assert_eq!(kde(&[], 1.0, Projection::HUE_SATURATION, grid), Err(DomainError::EmptySampleSet));
        assert!(kde(&[hsl(0, 0, 0)], 0.0, Projection::HUE_SATURATION, grid).is_err());
        assert!(kde(&[hsl(0, 0, 0)], f64::NAN, Projection::HUE_SATURATION, grid).is_err());
        let same = Projection { x: Dimension::Hue, y: Dimension::Hue };
        assert!(matches!(kde(&[hsl(0, 0, 0)], 1.0, same, grid), Err(DomainError::InvalidProjection(_))));
    }

    proptest! {
        #[test]
        fn padded_grid_captures_all_mass(
            colors in prop::collection::vec((0u16..360, 0u16..=100, 0u16..=100), 1..20),
            bw in 0.5f64..3.0,
        ) {
            let samples: Vec<_> = colors.into_iter().map(|(h, s, l)| hsl(h, s, l)).collect();
            let grid = KdeGrid { step: 0.5, padding: 10.0 * bw };
            let est = kde(&samples, bw, Projection::HUE_LIGHTNESS, grid).unwrap();
            prop_assert!(est.density.iter().all(|&d| d >= 0.0));
            prop_assert!((est.integral() - 1.0).abs() < 0.02);
        }
    }
}
