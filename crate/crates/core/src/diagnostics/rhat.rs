use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::color::HslColor;

/// Potential scale reduction of one scalar quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rhat {
    pub value: f64,
    /// Zero within-chain variance: the value is a convention (1 or +inf),
    /// not an estimate.
    pub degenerate: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Gelman-Rubin R-hat without chain splitting or rank normalization.
///
/// `W` is the mean within-chain variance, `B/n` the variance of the chain
/// means, `V = (n-1)/n W + B/n` and `R = sqrt(V / W)`. With `W = 0` the result
/// is 1 when all chains agree and `+inf` otherwise.
pub fn gelman_rubin<C: AsRef<[f64]>>(chains: &[C]) -> Result<Rhat, DiagnosticsError> {
    if chains.len() < 2 {
        return Err(DiagnosticsError::TooFewChains(chains.len()));
    }
    let n = chains[0].as_ref().len();
    if let Some(bad) = chains.iter().find(|c| c.as_ref().len() != n) {
        return Err(DiagnosticsError::UnequalLengths { expected: n, actual: bad.as_ref().len() });
    }
    if n < 2 {
        return Err(DiagnosticsError::ChainTooShort(n));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c.as_ref())).collect();
    let within = mean(&chains.iter().map(|c| sample_variance(c.as_ref())).collect::<Vec<_>>());
    let between_over_n = sample_variance(&means);
    if within == 0.0 {
        let value = if between_over_n == 0.0 { 1.0 } else { f64::INFINITY };
        return Ok(Rhat { value, degenerate: true });
    }
    let nf = n as f64;
    let pooled = (nf - 1.0) / nf * within + between_over_n;
    Ok(Rhat { value: (pooled / within).sqrt(), degenerate: false })
}

fn check_chains(chains: &[Vec<HslColor>], t: usize) -> Result<(), DiagnosticsError> {
    if chains.len() < 2 {
        return Err(DiagnosticsError::TooFewChains(chains.len()));
    }
    if t < 2 {
        return Err(DiagnosticsError::ChainTooShort(t));
    }
    if let Some(short) = chains.iter().find(|c| c.len() < t) {
        return Err(DiagnosticsError::ChainTooShort(short.len()));
    }
    Ok(())
}

/// Per-dimension R-hat of the first `t` samples of each chain.
pub fn rhat_components(chains: &[Vec<HslColor>], t: usize) -> Result<[Rhat; 3], DiagnosticsError> {
    check_chains(chains, t)?;
    let mut out = [Rhat { value: 1.0, degenerate: true }; 3];
    for (d, slot) in out.iter_mut().enumerate() {
        let series: Vec<Vec<f64>> =
            chains.iter().map(|c| c[..t].iter().map(|x| x.as_reals()[d]).collect()).collect();
        *slot = gelman_rubin(&series)?;
    }
    Ok(out)
}

/// Worst (largest) per-dimension R-hat over the first `t` samples.
pub fn rhat_vector(chains: &[Vec<HslColor>], t: usize) -> Result<f64, DiagnosticsError> {
    Ok(rhat_components(chains, t)?.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max))
}

/// Cumulative R-hat for every prefix length `t = 2..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhatTrace {
    /// Max-over-dimensions value at `t = index + 2`.
    pub values: Vec<f64>,
    pub components: Vec<[f64; 3]>,
    pub degenerate: Vec<bool>,
}

impl RhatTrace {
    /// Prefix length of entry `i`.
    pub fn iteration_at(i: usize) -> usize {
        i + 2
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// First prefix length at which R-hat is at or below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.values.iter().position(|&v| v <= threshold).map(Self::iteration_at)
    }
}

/// Evaluates [`rhat_vector`] on every prefix of the chains, truncated to the
/// shortest chain.
pub fn rhat_trace(chains: &[Vec<HslColor>]) -> Result<RhatTrace, DiagnosticsError> {
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    check_chains(chains, len)?;
    let mut trace = RhatTrace { values: Vec::new(), components: Vec::new(), degenerate: Vec::new() };
    for t in 2..=len {
        let parts = rhat_components(chains, t)?;
        trace.values.push(parts.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max));
        trace.components.push(parts.map(|r| r.value));
        trace.degenerate.push(parts.iter().any(|r| r.degenerate));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hsl(h: u16, s: u16, l: u16) -> HslColor {
        HslColor::new(h, s, l).unwrap()
    }

    #[test]
    fn hand_computed_value() {
        // B = 0, W = 1, V = 2/3
        let r = gelman_rubin(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!((r.value - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r.value - 0.8165).abs() < 1e-4);
        assert!(!r.degenerate);
    }

    #[test]
    fn separated_chains_have_large_rhat() {
        // means 2 and 12, each with variance 1: W = 1, B/n = 50, V = 2/3 + 50
        let r = gelman_rubin(&[vec![1.0, 2.0, 3.0], vec![11.0, 12.0, 13.0]]).unwrap();
        assert!((r.value - (2.0f64 / 3.0 + 50.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_conventions() {
        assert_eq!(gelman_rubin(&[vec![5.0, 5.0], vec![5.0, 5.0]]).unwrap(), Rhat { value: 1.0, degenerate: true });
        let r = gelman_rubin(&[vec![0.0, 0.0], vec![10.0, 10.0]]).unwrap();
        assert!(r.value.is_infinite() && r.degenerate);
    }

    #[test]
    fn precondition_errors() {
        assert_eq!(gelman_rubin(&[vec![1.0, 2.0]]), Err(DiagnosticsError::TooFewChains(1)));
        assert_eq!(gelman_rubin(&[vec![1.0], vec![2.0]]), Err(DiagnosticsError::ChainTooShort(1)));
        assert!(matches!(
            gelman_rubin(&[vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]),
            Err(DiagnosticsError::UnequalLengths { .. })
        ));
        let one = vec![vec![hsl(0, 0, 0); 5]];
        assert_eq!(rhat_trace(&one), Err(DiagnosticsError::TooFewChains(1)));
    }

    #[test]
    fn shared_point_mass_gives_one() {
        let chains = vec![vec![hsl(10, 20, 30); 8]; 4];
        assert_eq!(rhat_vector(&chains, 8).unwrap(), 1.0);
    }

    #[test]
    fn trace_has_one_entry_per_prefix() {
        let chains = vec![
            (0..10).map(|i| hsl(i * 3, 50, 50)).collect::<Vec<_>>(),
            (0..10).map(|i| hsl(i * 5, 40, 60)).collect::<Vec<_>>(),
        ];
        let trace = rhat_trace(&chains).unwrap();
        assert_eq!(trace.values.len(), 9);
        assert_eq!(trace.last().unwrap(), rhat_vector(&chains, 10).unwrap());
        assert_eq!(trace.values[0], rhat_vector(&chains, 2).unwrap());
    }

    proptest! {
        #[test]
        fn invariant_under_shift_and_scale(
            chains in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 6), 2..5),
            shift in -100.0f64..100.0,
            scale in 0.1f64..10.0,
        ) {
            let base = gelman_rubin(&chains).unwrap();
            let moved: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| x * scale + shift).collect()).collect();
            let other = gelman_rubin(&moved).unwrap();
            prop_assume!(!base.degenerate);
            prop_assert!((base.value - other.value).abs() < 1e-6 * base.value.max(1.0));
        }

        #[test]
        fn identical_chains_give_sqrt_n_minus_one_over_n(
            chain in prop::collection::vec((0u16..360, 0u16..=100, 0u16..=100), 2..40),
            k in 2usize..6,
        ) {
            let colors: Vec<HslColor> = chain.into_iter().map(|(h, s, l)| hsl(h, s, l)).collect();
            let n = colors.len();
            let chains = vec![colors; k];
            let parts = rhat_components(&chains, n).unwrap();
            let expected = ((n as f64 - 1.0) / n as f64).sqrt();
            for r in parts {
                prop_assert!(r.degenerate || (r.value - expected).abs() < 1e-12);
                prop_assert!(r.value < 1.0 || r.degenerate);
            }
        }
    }
}
