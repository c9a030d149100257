//! The four elicitation procedures and the experiment driver.
//!
//! Every procedure is a loop that builds a [`Query`], hands it to a
//! [`Respondent`](crate::respondent::Respondent) and records the full
//! exchange as a [`ChainRecord`]. Randomness comes from an explicit
//! [`ChainRng`](crate::seeds::ChainRng), so a chain replays bit-for-bit from
//! its seed.

mod chains;
mod experiment;
mod proposal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{Dimension, HslColor};
use crate::respondent::{Answer, Query};

pub use chains::{run_chain, run_direct_prompting, run_direct_sampling, run_gibbs, run_mcmc, run_mcmc_with};
pub use experiment::{run_experiment, ChainRun, ChainTask, DEFAULT_OBJECTS};
pub use proposal::{init_state, MixtureProposal, Proposal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("unknown method {0:?}; expected one of direct_prompting, direct_sampling, mcmc, gibbs")]
    UnknownMethod(String),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("no objects to run")]
    NoObjects,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectPrompting,
    DirectSampling,
    Mcmc,
    Gibbs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::DirectPrompting, Method::DirectSampling, Method::Mcmc, Method::Gibbs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DirectPrompting => "direct_prompting",
            Method::DirectSampling => "direct_sampling",
            Method::Mcmc => "mcmc",
            Method::Gibbs => "gibbs",
        }
    }

    /// Whether successive samples form a Markov chain (and R-hat applies).
    pub fn is_markov(self) -> bool {
        matches!(self, Method::Mcmc | Method::Gibbs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| SamplerError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: Method,
    pub iterations: usize,
    pub chains: usize,
    /// Per-dimension variance of the Gaussian proposal.
    pub proposal_variance: f64,
    /// Probability that a proposal is a uniform draw from the whole cube.
    pub uniform_jump: f64,
    pub gibbs_order: Vec<Dimension>,
    /// Count a full sweep over `gibbs_order` as one iteration instead of one
    /// dimension update.
    pub gibbs_sweep_counting: bool,
    pub seed: u64,
    /// Fixed starting state; drawn uniformly when absent.
    pub initial_state: Option<HslColor>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            method: Method::Mcmc,
            iterations: 500,
            chains: 4,
            proposal_variance: 30.0,
            uniform_jump: 0.1,
            gibbs_order: Dimension::ALL.to_vec(),
            gibbs_sweep_counting: false,
            seed: 0,
            initial_state: None,
        }
    }
}

impl SamplerConfig {
    pub fn for_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::InvalidConfig(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.chains == 0 {
            return bad("chains must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.uniform_jump) {
            return bad("uniform_jump must lie in [0, 1]");
        }
        if !(self.proposal_variance.is_finite() && self.proposal_variance >= 0.0) {
            return bad("proposal_variance must be finite and nonnegative");
        }
        if self.gibbs_order.is_empty() {
            return bad("gibbs_order must name at least one dimension");
        }
        Ok(())
    }
}

/// Which branch of the proposal mixture produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalKind {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "n/a")]
    NotApplicable,
}

/// Which color was shown in the "Option A" slot of a pairwise query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShownAsA {
    Current,
    Candidate,
}

/// One iteration's full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_id: usize,
    pub iteration: usize,
    pub method: Method,
    /// State before the iteration. For the static methods, the color queried
    /// or reported.
    pub current: HslColor,
    pub proposal: Option<HslColor>,
    pub proposal_kind: ProposalKind,
    pub shown_as_a: Option<ShownAsA>,
    pub query: Query,
    pub prompt: String,
    pub raw_answer: String,
    pub answer: Answer,
    pub result: HslColor,
    /// MCMC: candidate chosen. Direct sampling: color retained.
    pub accepted: Option<bool>,
    /// A fill answer fell outside its dimension's range and was wrapped or clamped.
    #[serde(default)]
    pub adjusted: bool,
    /// Milliseconds since the Unix epoch; absent for deterministic respondents.
    pub timestamp_ms: Option<u64>,
}

/// Everything one chain produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub object: String,
    pub chain_id: usize,
    pub method: Method,
    pub samples: Vec<HslColor>,
    pub records: Vec<ChainRecord>,
    pub accept_count: usize,
    /// False when the respondent failed part-way; `samples` then holds what
    /// was gathered before the failure.
    pub complete: bool,
    pub failure: Option<String>,
}
