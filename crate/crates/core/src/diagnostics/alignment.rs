use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::color::HslColor;
use crate::error::DomainError;
use crate::grid::{bin_center, bin_triple, histogram, GridHistogram, GRID_BINS};
use crate::sampler::{ChainOutput, Method};

/// Hellinger distance between two mass vectors over the same bins.
pub fn hellinger_masses(p: &[f64], q: &[f64]) -> Result<f64, DomainError> {
    if p.len() != q.len() {
        return Err(DomainError::GridMismatch { expected: p.len(), actual: q.len() });
    }
    let sum: f64 = p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok((0.5 * sum).sqrt().clamp(0.0, 1.0))
}

/// `sqrt(1/2 Σ (√p − √q)²)`: 0 for identical histograms, 1 for disjoint ones.
pub fn hellinger(p: &GridHistogram, q: &GridHistogram) -> f64 {
    hellinger_masses(p.bins(), q.bins()).expect("grid histograms share one layout")
}

/// Center of the heaviest bin; ties go to the lowest `(i, j, k)`.
pub fn mode_of(h: &GridHistogram) -> HslColor {
    let mut best = 0;
    for (i, &m) in h.bins().iter().enumerate() {
        if m > h.bins()[best] {
            best = i;
        }
    }
    debug_assert!(best < GRID_BINS);
    bin_center(bin_triple(best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HueMetric {
    /// Plain difference of hue degrees.
    #[default]
    Linear,
    /// Shorter way around the hue circle.
    Circular,
}

impl FromStr for HueMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(HueMetric::Linear),
            "circular" => Ok(HueMetric::Circular),
            other => Err(format!("unknown hue metric {other:?}; expected linear or circular")),
        }
    }
}

impl fmt::Display for HueMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HueMetric::Linear => "linear",
            HueMetric::Circular => "circular",
        })
    }
}

/// Euclidean distance between two colors in raw HSL units.
pub fn mode_distance(a: HslColor, b: HslColor, metric: HueMetric) -> f64 {
    let raw = (a.h() as f64 - b.h() as f64).abs();
    let dh = match metric {
        HueMetric::Linear => raw,
        HueMetric::Circular => raw.min(360.0 - raw),
    };
    let ds = a.s() as f64 - b.s() as f64;
    let dl = a.l() as f64 - b.l() as f64;
    (dh * dh + ds * ds + dl * dl).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOptions {
    pub hue_metric: HueMetric,
    /// Samples dropped from the start of every chain.
    pub burn_in: usize,
    /// Iteration spacing of the progression curves.
    pub progression_step: usize,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        Self { hue_metric: HueMetric::Linear, burn_in: 0, progression_step: 10 }
    }
}

/// Chain-averaged alignment of one method on one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub object: String,
    pub method: Method,
    pub hellinger: f64,
    pub mode_distance: f64,
    /// Number of chains averaged.
    pub repetitions: usize,
}

/// Mean and standard error across chains after a given number of iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub iteration: usize,
    pub hellinger_mean: f64,
    pub hellinger_sem: f64,
    pub mode_mean: f64,
    pub mode_sem: f64,
    pub chains: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progression {
    pub object: String,
    pub method: Method,
    pub points: Vec<ProgressPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub hue_metric: HueMetric,
    pub rows: Vec<AlignmentRow>,
    pub progressions: Vec<Progression>,
}

impl AlignmentReport {
    pub fn objects(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.object) {
                seen.push(r.object.clone());
            }
        }
        seen
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut ms: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        ms.sort();
        ms.dedup();
        ms
    }

    pub fn row(&self, object: &str, method: Method) -> Option<&AlignmentRow> {
        self.rows.iter().find(|r| r.object == object && r.method == method)
    }
}

/// Looks an object's reference up by exact name, then case-insensitively.
pub fn find_reference<'a>(references: &'a BTreeMap<String, GridHistogram>, object: &str) -> Option<&'a GridHistogram> {
    references.get(object).or_else(|| {
        references.iter().find(|(k, _)| k.eq_ignore_ascii_case(object)).map(|(_, v)| v)
    })
}

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Number of retained samples after each iteration count, per chain.
fn samples_after(chain: &ChainOutput, iterations: usize) -> usize {
    match chain.method {
        Method::DirectSampling if !chain.records.is_empty() => chain
            .records
            .iter()
            .take(iterations)
            .filter(|r| r.accepted == Some(true))
            .count(),
        _ => iterations.min(chain.samples.len()),
    }
}

fn chain_metrics(samples: &[HslColor], reference: &GridHistogram, metric: HueMetric) -> Option<(f64, f64)> {
    let h = histogram(samples).ok()?;
    Some((hellinger(&h, reference), mode_distance(mode_of(&h), mode_of(reference), metric)))
}

/// Compares every complete chain against its object's reference histogram and
/// averages per object and method. Chains with no samples after burn-in are
/// skipped; a missing reference is an error.
pub fn build_alignment_report(
    chains: &[ChainOutput],
    references: &BTreeMap<String, GridHistogram>,
    options: AlignmentOptions,
) -> Result<AlignmentReport, DiagnosticsError> {
    let mut groups: Vec<((String, Method), Vec<&ChainOutput>)> = Vec::new();
    for chain in chains.iter().filter(|c| c.complete) {
        let key = (chain.object.clone(), chain.method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(chain),
            None => groups.push((key, vec![chain])),
        }
    }

    let mut report = AlignmentReport { hue_metric: options.hue_metric, rows: Vec::new(), progressions: Vec::new() };
    for ((object, method), group) in groups {
        let reference =
            find_reference(references, &object).ok_or_else(|| DiagnosticsError::MissingReference(object.clone()))?;

        let per_chain: Vec<(f64, f64)> = group
            .iter()
            .filter_map(|c| chain_metrics(c.samples.get(options.burn_in..).unwrap_or(&[]), reference, options.hue_metric))
            .collect();
        if per_chain.is_empty() {
            continue;
        }
        let n = per_chain.len() as f64;
        report.rows.push(AlignmentRow {
            object: object.clone(),
            method,
            hellinger: per_chain.iter().map(|m| m.0).sum::<f64>() / n,
            mode_distance: per_chain.iter().map(|m| m.1).sum::<f64>() / n,
            repetitions: per_chain.len(),
        });

        let step = options.progression_step.max(1);
        let total_iterations = group.iter().map(|c| c.records.len().max(c.samples.len())).max().unwrap_or(0);
        let mut points = Vec::new();
        let mut t = step;
        while t <= total_iterations {
            let metrics: Vec<(f64, f64)> = group
                .iter()
                .filter_map(|c| {
                    let upto = samples_after(c, t);
                    let kept = c.samples[..upto].get(options.burn_in..).unwrap_or(&[]);
                    chain_metrics(kept, reference, options.hue_metric)
                })
                .collect();
            if !metrics.is_empty() {
                let (hm, hs) = mean_sem(&metrics.iter().map(|m| m.0).collect::<Vec<_>>());
                let (mm, ms) = mean_sem(&metrics.iter().map(|m| m.1).collect::<Vec<_>>());
                points.push(ProgressPoint {
                    iteration: t,
                    hellinger_mean: hm,
                    hellinger_sem: hs,
                    mode_mean: mm,
                    mode_sem: ms,
                    chains: metrics.len(),
                });
            }
            t += step;
        }
        report.progressions.push(Progression { object, method, points });
    }
    Ok(report)
}
