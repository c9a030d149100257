use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{render_answer, Answer, Choice, LatticeTarget, Query, Respondent, RespondentError, Response};
use crate::seeds::ChainRng;

/// Probability of picking the second option under the Barker rule,
/// `p(b) / (p(a) + p(b))`, from log densities. Two zero densities tie at 1/2.
pub fn barker_choice_probability(log_a: f64, log_b: f64) -> f64 {
    match (log_a == f64::NEG_INFINITY, log_b == f64::NEG_INFINITY) {
        (true, true) => 0.5,
        (true, false) => 1.0,
        (false, true) => 0.0,
        (false, false) => 1.0 / (1.0 + (log_a - log_b).exp()),
    }
}

/// How the oracle turns a density into a yes/no match judgment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", content = "fraction", rename_all = "snake_case")]
pub enum MatchRule {
    /// Yes with probability `density / max density`, which makes the accepted
    /// colors an exact rejection sample of the target.
    #[default]
    Graded,
    /// Yes exactly when `density >= fraction * max density`.
    Threshold(f64),
}

/// A respondent that answers every query exactly as the target distribution
/// dictates.
#[derive(Debug, Clone)]
pub struct Oracle {
    target: Arc<LatticeTarget>,
    rule: MatchRule,
    rng: ChainRng,
}

impl Oracle {
    pub fn new(target: Arc<LatticeTarget>, seed: u64) -> Self {
        Self { target, rule: MatchRule::Graded, rng: ChainRng::seed_from_u64(seed) }
    }

    pub fn with_rule(mut self, rule: MatchRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn target(&self) -> &LatticeTarget {
        &self.target
    }

    fn decide(&mut self, query: &Query) -> Answer {
        let target = &*self.target;
        match query {
            Query::ReportColor { .. } => Answer::ColorCode(target.sample(&mut self.rng)),
            Query::MatchJudgment { color, .. } => {
                let ratio = target.relative_density(*color);
                let yes = match self.rule {
                    MatchRule::Graded => self.rng.random::<f64>() < ratio,
                    MatchRule::Threshold(fraction) => ratio >= fraction,
                };
                Answer::YesNo(yes)
            }
            Query::PairwiseChoice { option_a, option_b, .. } => {
                let p_b = barker_choice_probability(target.log_density(*option_a), target.log_density(*option_b));
                let pick_b = self.rng.random::<f64>() < p_b;
                Answer::Choice(if pick_b { Choice::B } else { Choice::A })
            }
            Query::DimensionFill { known, missing, .. } => {
                let mut at = crate::color::HslColor::new(0, 0, 0).expect("origin is valid");
                for &(dim, v) in known {
                    at = at.with(dim, v as i64);
                }
                let probs = target.conditional(at, *missing);
                let u = self.rng.random::<f64>();
                let mut acc = 0.0;
                let mut value = probs.len() - 1;
                for (v, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        value = v;
                        break;
                    }
                }
                Answer::DimensionValue(value as i64)
            }
        }
    }
}

impl Respondent for Oracle {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        let answer = self.decide(query);
        Ok(Response { raw: render_answer(&answer), answer })
    }
}
