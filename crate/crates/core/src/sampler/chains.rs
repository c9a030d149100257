use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;

use super::proposal::{init_state, MixtureProposal, Proposal};
use super::{ChainOutput, ChainRecord, Method, ProposalKind, SamplerConfig, ShownAsA};
use crate::color::HslColor;
use crate::respondent::{render_prompt, Answer, Choice, Query, Respondent, RespondentError, Response};
use crate::seeds::ChainRng;

/// Shared bookkeeping for a running chain.
struct Tracker {
    output: ChainOutput,
    wall_clock: bool,
}

impl Tracker {
    fn new(object: &str, chain_id: usize, method: Method, wall_clock: bool) -> Self {
        Self {
            output: ChainOutput {
                object: object.to_string(),
                chain_id,
                method,
                samples: Vec::new(),
                records: Vec::new(),
                accept_count: 0,
                complete: true,
                failure: None,
            },
            wall_clock,
        }
    }

    fn timestamp(&self) -> Option<u64> {
        self.wall_clock
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0))
    }

    fn fail(mut self, err: RespondentError) -> ChainOutput {
        self.output.complete = false;
        self.output.failure = Some(err.to_string());
        self.output
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        iteration: usize,
        current: HslColor,
        proposal: Option<(HslColor, ProposalKind)>,
        shown_as_a: Option<ShownAsA>,
        query: Query,
        response: Response,
        result: HslColor,
        accepted: Option<bool>,
        adjusted: bool,
    ) {
        let record = ChainRecord {
            chain_id: self.output.chain_id,
            iteration,
            method: self.output.method,
            current,
            proposal: proposal.map(|p| p.0),
            proposal_kind: proposal.map_or(ProposalKind::NotApplicable, |p| p.1),
            shown_as_a,
            prompt: render_prompt(&query),
            query,
            raw_answer: response.raw,
            answer: response.answer,
            result,
            accepted,
            adjusted,
            timestamp_ms: self.timestamp(),
        };
        self.output.records.push(record);
    }
}

/// Asks and checks that the answer variant fits the query.
fn ask<R: Respondent + ?Sized>(respondent: &mut R, query: &Query) -> Result<Response, RespondentError> {
    let response = respondent.answer(query)?;
    if !response.answer.answers(query.kind()) {
        return Err(RespondentError::MalformedAnswer {
            raw: response.raw,
            expected: "an answer of the queried kind",
        });
    }
    Ok(response)
}

fn starting_state(cfg: &SamplerConfig, rng: &mut ChainRng) -> HslColor {
    cfg.initial_state.unwrap_or_else(|| init_state(rng))
}

/// MCMC with pairwise choices as the Barker accept step, using the
/// Gaussian/uniform mixture proposal from `cfg`.
pub fn run_mcmc<R: Respondent + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> ChainOutput {
    let proposal = MixtureProposal { variance: cfg.proposal_variance, uniform_jump: cfg.uniform_jump };
    run_mcmc_with(object, chain_id, respondent, cfg, &proposal, rng)
}

/// MCMC with an arbitrary proposal. Each iteration shows the current state
/// and the candidate in random order and moves to whichever is picked; the
/// state is recorded every iteration.
pub fn run_mcmc_with<R: Respondent + ?Sized, P: Proposal + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
    proposal: &P,
    rng: &mut ChainRng,
) -> ChainOutput {
    let mut tracker = Tracker::new(object, chain_id, Method::Mcmc, respondent.wall_clock());
    let mut state = starting_state(cfg, rng);
    for iteration in 0..cfg.iterations {
        let (candidate, kind) = proposal.propose(state, rng);
        let candidate_first = rng.random::<bool>();
        let (option_a, option_b, shown) = if candidate_first {
            (candidate, state, ShownAsA::Candidate)
        } else {
            (state, candidate, ShownAsA::Current)
        };
        let query = Query::PairwiseChoice { object: object.to_string(), option_a, option_b };
        let response = match ask(respondent, &query) {
            Ok(r) => r,
            Err(e) => return tracker.fail(e),
        };
        let picked = match response.answer {
            Answer::Choice(c) => c,
            _ => unreachable!("checked by ask"),
        };
        let accepted = (picked == Choice::A) == candidate_first;
        let next = if accepted { candidate } else { state };
        tracker.record(iteration, state, Some((candidate, kind)), Some(shown), query, response, next, Some(accepted), false);
        if accepted {
            tracker.output.accept_count += 1;
        }
        state = next;
        tracker.output.samples.push(state);
    }
    tracker.output
}

/// Gibbs sampling: each step asks for one missing dimension, cycling through
/// `cfg.gibbs_order`, and keeps the other two fixed.
pub fn run_gibbs<R: Respondent + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> ChainOutput {
    let mut tracker = Tracker::new(object, chain_id, Method::Gibbs, respondent.wall_clock());
    let mut state = starting_state(cfg, rng);
    let order = &cfg.gibbs_order;
    let updates_per_iteration = if cfg.gibbs_sweep_counting { order.len() } else { 1 };
    let mut step = 0usize;
    for iteration in 0..cfg.iterations {
        for _ in 0..updates_per_iteration {
            let dim = order[step % order.len()];
            step += 1;
            let query = Query::dimension_fill(object, state, dim);
            let response = match ask(respondent, &query) {
                Ok(r) => r,
                Err(e) => return tracker.fail(e),
            };
            let value = match response.answer {
                Answer::DimensionValue(v) => v,
                _ => unreachable!("checked by ask"),
            };
            let next = state.with(dim, value);
            let adjusted = next.get(dim) as i64 != value;
            tracker.record(iteration, state, None, None, query, response, next, None, adjusted);
            state = next;
        }
        tracker.output.samples.push(state);
    }
    tracker.output
}

/// Direct sampling: query uniformly drawn colors and keep the ones judged a match.
pub fn run_direct_sampling<R: Respondent + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> ChainOutput {
    let mut tracker = Tracker::new(object, chain_id, Method::DirectSampling, respondent.wall_clock());
    for iteration in 0..cfg.iterations {
        let color = init_state(rng);
        let query = Query::MatchJudgment { object: object.to_string(), color };
        let response = match ask(respondent, &query) {
            Ok(r) => r,
            Err(e) => return tracker.fail(e),
        };
        let keep = response.answer == Answer::YesNo(true);
        tracker.record(
            iteration,
            color,
            Some((color, ProposalKind::Uniform)),
            None,
            query,
            response,
            color,
            Some(keep),
            false,
        );
        if keep {
            tracker.output.accept_count += 1;
            tracker.output.samples.push(color);
        }
    }
    tracker.output
}

/// Direct prompting: independent requests to name a color.
pub fn run_direct_prompting<R: Respondent + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
) -> ChainOutput {
    let mut tracker = Tracker::new(object, chain_id, Method::DirectPrompting, respondent.wall_clock());
    for iteration in 0..cfg.iterations {
        let query = Query::ReportColor { object: object.to_string() };
        let response = match ask(respondent, &query) {
            Ok(r) => r,
            Err(e) => return tracker.fail(e),
        };
        let color = match response.answer {
            Answer::ColorCode(c) => c,
            _ => unreachable!("checked by ask"),
        };
        tracker.record(iteration, color, None, None, query, response, color, None, false);
        tracker.output.samples.push(color);
    }
    tracker.output
}

/// Dispatches on `cfg.method`.
pub fn run_chain<R: Respondent + ?Sized>(
    object: &str,
    chain_id: usize,
    respondent: &mut R,
    cfg: &SamplerConfig,
    rng: &mut ChainRng,
) -> ChainOutput {
    match cfg.method {
        Method::DirectPrompting => run_direct_prompting(object, chain_id, respondent, cfg),
        Method::DirectSampling => run_direct_sampling(object, chain_id, respondent, cfg, rng),
        Method::Mcmc => run_mcmc(object, chain_id, respondent, cfg, rng),
        Method::Gibbs => run_gibbs(object, chain_id, respondent, cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;

    use super::*;
    use crate::color::Dimension;
    use crate::respondent::{render_answer, LatticeTarget, Oracle, ReplayEntry, ReplayRespondent, TargetSpec};

    fn hsl(h: u16, s: u16, l: u16) -> HslColor {
        HslColor::new(h, s, l).unwrap()
    }

    fn cfg(method: Method, iterations: usize) -> SamplerConfig {
        SamplerConfig { method, iterations, ..SamplerConfig::default() }
    }

    fn respond(answer: Answer) -> Result<Response, RespondentError> {
        Ok(Response { raw: render_answer(&answer), answer })
    }

    /// Picks the candidate (or the current state) by tracking the chain itself.
    struct Tracking {
        state: HslColor,
        pick_candidate: bool,
    }

    impl Respondent for Tracking {
        fn answer(&mut self, q: &Query) -> Result<Response, RespondentError> {
            let Query::PairwiseChoice { option_a, option_b, .. } = q else { panic!("{q:?}") };
            let a_is_current = *option_a == self.state;
            assert!(a_is_current != (*option_b == self.state));
            let pick_a = a_is_current != self.pick_candidate;
            if self.pick_candidate {
                self.state = if pick_a { *option_a } else { *option_b };
            }
            respond(Answer::Choice(if pick_a { Choice::A } else { Choice::B }))
        }
    }

    /// Always moves one degree of hue, so candidate and state never coincide.
    struct Shift;

    impl Proposal for Shift {
        fn propose(&self, current: HslColor, _: &mut ChainRng) -> (HslColor, ProposalKind) {
            (current.with(Dimension::Hue, current.h() as i64 + 1), ProposalKind::Gaussian)
        }
    }

    struct Constant(Answer);

    impl Respondent for Constant {
        fn answer(&mut self, _: &Query) -> Result<Response, RespondentError> {
            respond(self.0.clone())
        }
    }

    /// Echoes the current value of the missing dimension.
    struct Echo(HslColor);

    impl Respondent for Echo {
        fn answer(&mut self, q: &Query) -> Result<Response, RespondentError> {
            let Query::DimensionFill { missing, .. } = q else { panic!() };
            respond(Answer::DimensionValue(self.0.get(*missing) as i64))
        }
    }

    struct FailAfter(usize);

    impl Respondent for FailAfter {
        fn answer(&mut self, _: &Query) -> Result<Response, RespondentError> {
            if self.0 == 0 {
                return Err(RespondentError::RespondentFailure { attempts: 3, last_raw: "huh".into() });
            }
            self.0 -= 1;
            respond(Answer::Choice(Choice::A))
        }
    }

    #[test]
    fn forced_acceptance_accepts_everything() {
        let start = hsl(100, 50, 50);
        let cfg = SamplerConfig { initial_state: Some(start), ..cfg(Method::Mcmc, 200) };
        let mut r = Tracking { state: start, pick_candidate: true };
        let out = run_mcmc_with("x", 0, &mut r, &cfg, &Shift, &mut ChainRng::seed_from_u64(1));
        assert_eq!(out.accept_count, 200);
        assert!(out.records.iter().all(|rec| rec.accepted == Some(true) && Some(rec.result) == rec.proposal));
    }

    #[test]
    fn forced_rejection_never_moves() {
        let start = hsl(100, 50, 50);
        let cfg = SamplerConfig { initial_state: Some(start), ..cfg(Method::Mcmc, 200) };
        let mut r = Tracking { state: start, pick_candidate: false };
        let out = run_mcmc_with("x", 0, &mut r, &cfg, &Shift, &mut ChainRng::seed_from_u64(2));
        assert_eq!(out.samples.len(), 200);
        assert!(out.samples.iter().all(|&s| s == start));
        assert_eq!(out.accept_count, 0);
    }

    #[test]
    fn mcmc_randomizes_presentation_order() {
        let cfg = cfg(Method::Mcmc, 1000);
        let mut r = Constant(Answer::Choice(Choice::A));
        let out = run_mcmc("x", 0, &mut r, &cfg, &mut ChainRng::seed_from_u64(3));
        let first = out.records.iter().filter(|r| r.shown_as_a == Some(ShownAsA::Candidate)).count();
        assert!((400..=600).contains(&first), "{first}");
        // always picking A accepts exactly when the candidate was shown first
        assert_eq!(out.accept_count, first);
    }

    #[test]
    fn mcmc_samples_are_previous_or_proposal() {
        let target = LatticeTarget::from_spec(&TargetSpec::gaussian([60.0, 60.0, 40.0], [15.0, 10.0, 10.0])).unwrap();
        let mut oracle = Oracle::new(Arc::new(target), 4);
        let out = run_mcmc("x", 0, &mut oracle, &cfg(Method::Mcmc, 500), &mut ChainRng::seed_from_u64(4));
        for rec in &out.records {
            let expected = if rec.accepted == Some(true) { rec.proposal.unwrap() } else { rec.current };
            assert_eq!(rec.result, expected);
        }
        for t in 1..out.samples.len() {
            let prev = out.samples[t - 1];
            assert!(out.samples[t] == prev || Some(out.samples[t]) == out.records[t].proposal);
            assert_eq!(out.records[t].current, prev);
        }
    }

    #[test]
    fn gibbs_point_mass_converges_in_one_sweep() {
        let c = hsl(200, 40, 60);
        let target = Arc::new(LatticeTarget::from_spec(&TargetSpec::point_mass(c)).unwrap());
        for seed in 0..5 {
            let mut oracle = Oracle::new(target.clone(), seed);
            let out = run_gibbs("x", 0, &mut oracle, &cfg(Method::Gibbs, 3), &mut ChainRng::seed_from_u64(seed));
            assert_eq!(out.samples[2], c);
        }
    }

    #[test]
    fn gibbs_changes_one_dimension_at_a_time() {
        let target = LatticeTarget::from_spec(&TargetSpec::gaussian([60.0, 60.0, 40.0], [15.0, 10.0, 10.0])).unwrap();
        let mut oracle = Oracle::new(Arc::new(target), 8);
        let out = run_gibbs("x", 0, &mut oracle, &cfg(Method::Gibbs, 300), &mut ChainRng::seed_from_u64(8));
        assert_eq!(out.samples.len(), 300);
        for (t, rec) in out.records.iter().enumerate() {
            let differing = Dimension::ALL.iter().filter(|&&d| rec.current.get(d) != rec.result.get(d)).count();
            assert!(differing <= 1);
            let Query::DimensionFill { missing, .. } = rec.query else { panic!() };
            assert_eq!(missing, Dimension::ALL[t % 3]);
        }
    }

    #[test]
    fn gibbs_echo_is_a_fixed_point() {
        let start = hsl(33, 44, 55);
        let cfg = SamplerConfig { initial_state: Some(start), ..cfg(Method::Gibbs, 30) };
        let out = run_gibbs("x", 0, &mut Echo(start), &cfg, &mut ChainRng::seed_from_u64(0));
        assert!(out.samples.iter().all(|&s| s == start));
    }

    #[test]
    fn gibbs_wraps_and_clamps_out_of_range_fills() {
        let start = hsl(10, 50, 50);
        let cfg = SamplerConfig { initial_state: Some(start), ..cfg(Method::Gibbs, 3) };
        let out = run_gibbs("x", 0, &mut Constant(Answer::DimensionValue(400)), &cfg, &mut ChainRng::seed_from_u64(0));
        assert_eq!(out.samples, vec![hsl(40, 50, 50), hsl(40, 100, 50), hsl(40, 100, 100)]);
        assert!(out.records.iter().all(|r| r.adjusted));
    }

    #[test]
    fn gibbs_sweep_counting_records_three_updates_per_sample() {
        let cfg = SamplerConfig { gibbs_sweep_counting: true, ..cfg(Method::Gibbs, 10) };
        let start = hsl(1, 2, 3);
        let cfg = SamplerConfig { initial_state: Some(start), ..cfg };
        let out = run_gibbs("x", 0, &mut Echo(start), &cfg, &mut ChainRng::seed_from_u64(0));
        assert_eq!(out.samples.len(), 10);
        assert_eq!(out.records.len(), 30);
    }

    #[test]
    fn direct_sampling_extremes() {
        let out = run_direct_sampling("x", 0, &mut Constant(Answer::YesNo(true)), &cfg(Method::DirectSampling, 300), &mut ChainRng::seed_from_u64(1));
        assert_eq!(out.samples.len(), 300);
        let out = run_direct_sampling("x", 0, &mut Constant(Answer::YesNo(false)), &cfg(Method::DirectSampling, 300), &mut ChainRng::seed_from_u64(1));
        assert!(out.samples.is_empty());
        assert_eq!(out.records.len(), 300);
        assert!(out.complete);
    }

    #[test]
    fn direct_sampling_half_space_retention() {
        let target = LatticeTarget::from_density_fn(|c| if c.h() < 180 { 1.0 } else { 0.0 }).unwrap();
        let mut oracle = Oracle::new(Arc::new(target), 6);
        let n = 4000;
        let out = run_direct_sampling("x", 0, &mut oracle, &cfg(Method::DirectSampling, n), &mut ChainRng::seed_from_u64(6));
        let kept = out.samples.len() as f64;
        assert!((kept - 2000.0).abs() <= 3.0 * (n as f64 * 0.25).sqrt(), "{kept}");
        assert!(out.samples.iter().all(|c| c.h() < 180));
        let low_quarter = out.samples.iter().filter(|c| c.h() < 90).count() as f64 / kept;
        assert!((low_quarter - 0.5).abs() < 0.05);
    }

    #[test]
    fn direct_prompting_point_mass_and_replay() {
        let c = hsl(5, 6, 7);
        let mut oracle = Oracle::new(Arc::new(LatticeTarget::from_spec(&TargetSpec::point_mass(c)).unwrap()), 1);
        let out = run_direct_prompting("x", 0, &mut oracle, &cfg(Method::DirectPrompting, 20));
        assert!(out.samples.iter().all(|&s| s == c));

        let colors = [hsl(1, 1, 1), hsl(359, 100, 0), hsl(180, 50, 50)];
        let entries = colors
            .iter()
            .map(|&c| ReplayEntry {
                query: Query::ReportColor { object: "x".into() },
                raw: render_answer(&Answer::ColorCode(c)),
                answer: Answer::ColorCode(c),
            })
            .collect();
        let out = run_direct_prompting("x", 0, &mut ReplayRespondent::new(entries), &cfg(Method::DirectPrompting, 3));
        assert_eq!(out.samples, colors);
    }

    #[test]
    fn failure_leaves_partial_incomplete_output() {
        let out = run_mcmc("x", 3, &mut FailAfter(7), &cfg(Method::Mcmc, 20), &mut ChainRng::seed_from_u64(0));
        assert!(!out.complete);
        assert_eq!(out.samples.len(), 7);
        assert_eq!(out.chain_id, 3);
        assert!(out.failure.unwrap().contains("huh"));
    }

    #[test]
    fn wrong_answer_kind_aborts() {
        let out = run_gibbs("x", 0, &mut Constant(Answer::YesNo(true)), &cfg(Method::Gibbs, 5), &mut ChainRng::seed_from_u64(0));
        assert!(!out.complete);
        assert!(out.samples.is_empty());
    }

    #[test]
    fn same_seed_same_records() {
        let spec = TargetSpec::gaussian([300.0, 40.0, 60.0], [15.0, 10.0, 10.0]);
        let target = Arc::new(LatticeTarget::from_spec(&spec).unwrap());
        for method in Method::ALL {
            let run = || {
                let mut oracle = Oracle::new(target.clone(), 77);
                run_chain("x", 0, &mut oracle, &cfg(method, 100), &mut ChainRng::seed_from_u64(78))
            };
            assert_eq!(run(), run());
        }
    }
}
