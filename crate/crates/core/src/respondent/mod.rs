//! The query/answer contract between samplers and the agents they consult.
//!
//! A sampler never knows what sits behind a [`Respondent`]: the synthetic
//! [`Oracle`] with a known target, an [`LlmClient`] speaking the
//! chat-completion protocol, or a [`ReplayRespondent`] reading a previous log.

mod llm;
mod oracle;
mod prompt;
mod replay;
mod supervisor;
mod target;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{Dimension, HslColor};

pub use llm::{LlmClient, LlmConfig};
pub use oracle::{barker_choice_probability, MatchRule, Oracle};
pub use prompt::{parse_answer, render_answer, render_prompt};
pub use replay::{ReplayEntry, ReplayRespondent};
pub use supervisor::Supervised;
pub use target::{GaussianComponent, LatticeTarget, TargetSpec};

/// Which of the two presented options was picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

/// One question put to a respondent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    /// Name a color for the object.
    ReportColor { object: String },
    /// Does this color match the object?
    MatchJudgment { object: String, color: HslColor },
    /// Which of two colors better matches the object?
    PairwiseChoice { object: String, option_a: HslColor, option_b: HslColor },
    /// Fill in the missing coordinate; `known` holds the other two in H, S, L order.
    DimensionFill { object: String, known: [(Dimension, u16); 2], missing: Dimension },
}

impl Query {
    /// A fill query that keeps every coordinate of `color` except `missing`.
    pub fn dimension_fill(object: impl Into<String>, color: HslColor, missing: Dimension) -> Self {
        let [a, b] = missing.others();
        Query::DimensionFill {
            object: object.into(),
            known: [(a, color.get(a)), (b, color.get(b))],
            missing,
        }
    }

    pub fn object(&self) -> &str {
        match self {
            Query::ReportColor { object }
            | Query::MatchJudgment { object, .. }
            | Query::PairwiseChoice { object, .. }
            | Query::DimensionFill { object, .. } => object,
        }
    }

    pub fn kind(&self) -> QueryKind {
        match self {
            Query::ReportColor { .. } => QueryKind::ReportColor,
            Query::MatchJudgment { .. } => QueryKind::MatchJudgment,
            Query::PairwiseChoice { .. } => QueryKind::PairwiseChoice,
            Query::DimensionFill { .. } => QueryKind::DimensionFill,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    ReportColor,
    MatchJudgment,
    PairwiseChoice,
    DimensionFill,
}

/// A parsed reply. Each variant answers exactly one [`Query`] variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Answer {
    ColorCode(HslColor),
    YesNo(bool),
    Choice(Choice),
    /// Raw integer as given; samplers wrap or clamp it into range.
    DimensionValue(i64),
}

impl Answer {
    pub fn answers(&self, kind: QueryKind) -> bool {
        matches!(
            (self, kind),
            (Answer::ColorCode(_), QueryKind::ReportColor)
                | (Answer::YesNo(_), QueryKind::MatchJudgment)
                | (Answer::Choice(_), QueryKind::PairwiseChoice)
                | (Answer::DimensionValue(_), QueryKind::DimensionFill)
        )
    }
}

/// What a respondent returns: the parsed answer and the reply text it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub answer: Answer,
    pub raw: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RespondentError {
    #[error("could not parse reply {raw:?} as {expected}")]
    MalformedAnswer { raw: String, expected: &'static str },
    #[error("no usable answer after {attempts} attempts; last reply {last_raw:?}")]
    RespondentFailure { attempts: u32, last_raw: String },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("target is not normalizable: {0}")]
    DegenerateTarget(String),
    #[error("replay diverged at entry {index}: expected {expected}, got {actual}")]
    ReplayDivergence { index: usize, expected: String, actual: String },
    #[error("replay log exhausted after {0} entries")]
    ReplayExhausted(usize),
    #[error("respondent cannot answer {0:?} queries")]
    Unsupported(QueryKind),
}

impl RespondentError {
    /// Transport failures may succeed on a later attempt; everything else is final.
    pub fn is_retryable(&self) -> bool {
        matches!(self, RespondentError::TransportError(_))
    }
}

/// Anything that can answer sampler queries.
pub trait Respondent {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError>;

    /// Whether records produced with this respondent should carry wall-clock timestamps.
    fn wall_clock(&self) -> bool {
        false
    }
}

impl<R: Respondent + ?Sized> Respondent for Box<R> {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        (**self).answer(query)
    }

    fn wall_clock(&self) -> bool {
        (**self).wall_clock()
    }
}

impl<R: Respondent + ?Sized> Respondent for &mut R {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        (**self).answer(query)
    }

    fn wall_clock(&self) -> bool {
        (**self).wall_clock()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_fill_keeps_other_coordinates() {
        let c = HslColor::new(270, 50, 12).unwrap();
        let q = Query::dimension_fill("strawberry", c, Dimension::Lightness);
        assert_eq!(
            q,
            Query::DimensionFill {
                object: "strawberry".into(),
                known: [(Dimension::Hue, 270), (Dimension::Saturation, 50)],
                missing: Dimension::Lightness,
            }
        );
        // the missing coordinate's current value does not leak into the query
        assert_eq!(q, Query::dimension_fill("strawberry", c.with(Dimension::Lightness, 99), Dimension::Lightness));
    }

    #[test]
    fn answers_match_queries_one_to_one() {
        let kinds = [QueryKind::ReportColor, QueryKind::MatchJudgment, QueryKind::PairwiseChoice, QueryKind::DimensionFill];
        let answers = [
            Answer::ColorCode(HslColor::new(0, 0, 0).unwrap()),
            Answer::YesNo(true),
            Answer::Choice(Choice::A),
            Answer::DimensionValue(3),
        ];
        for (i, a) in answers.iter().enumerate() {
            for (j, &k) in kinds.iter().enumerate() {
                assert_eq!(a.answers(k), i == j);
            }
        }
    }

    #[test]
    fn query_serializes_with_kind_tag() {
        let q = Query::PairwiseChoice {
            object: "lemon".into(),
            option_a: HslColor::new(1, 2, 3).unwrap(),
            option_b: HslColor::new(4, 5, 6).unwrap(),
        };
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, r#"{"kind":"pairwise_choice","object":"lemon","option_a":[1,2,3],"option_b":[4,5,6]}"#);
        assert_eq!(serde_json::from_str::<Query>(&json).unwrap(), q);
    }
}
