//! Prompt templates and tolerant reply parsing.

use std::sync::LazyLock;

use regex::Regex;

use super::{Answer, Choice, Query, QueryKind, RespondentError};
use crate::color::{canonicalize, Dimension};

const REPORT_PREAMBLE: &str = "You are a participant in a color judgment task. You will be asked to describe an object's color in each question. Your objective is to generate an apt color code in HSL format to match the given object as well as possible. Remember, it\u{2019}s essential to answer the question with a single HSL code, even if the generated color or the object might seem unusual at times. Please limit your response to just the three values of the HSL code, for example, 'h, s, l'.";

const MATCH_PREAMBLE: &str = "You are a participant in a color judgment task. You will see a question about whether a color (represented in HSL format) matches an object. Simply answer either 'yes' or 'no' based on your interpretation of the object\u{2019}s color in the question.";

const CHOICE_PREAMBLE: &str = "You are a participant in a color choice task. You will see a question with two color options in HSL format. Simply choose either Option A or Option B. Remember, it\u{2019}s essential to pick one color that better matches the object in the question, even if the choices might seem unusual at times. Please limit your response to just 'A' or 'B'.";

const FILL_PREAMBLE: &str = "You are a participant in a color judgment task. You will see an object and a color code in HSL format, however, one dimension of the given HSL color code is unknown. Your objective is to assign an apt integer to the unknown dimension to make the HSL color code match the given object as well as possible. Remember, it\u{2019}s essential to complete the color, even if the generated color might seem unusual at times. Please limit your response to just the value you'd like to assign to the unknown dimension.";

/// Renders the prompt text for a query. Pairwise options appear in the order given.
pub fn render_prompt(query: &Query) -> String {
    match query {
        Query::ReportColor { object } => {
            format!("{REPORT_PREAMBLE} What color matches the following object: {object}.")
        }
        Query::MatchJudgment { object, color } => {
            format!("{MATCH_PREAMBLE} Does the color {color} match the following object: {object}?")
        }
        Query::PairwiseChoice { object, option_a, option_b } => format!(
            "{CHOICE_PREAMBLE} Which color better matches the following object: {object}. \
             Option A{option_a} or Option B{option_b}?"
        ),
        Query::DimensionFill { object, known, missing } => {
            let slots: Vec<String> = Dimension::ALL
                .iter()
                .map(|d| {
                    if d == missing {
                        "'unknown'".to_string()
                    } else {
                        let (_, v) = known.iter().find(|(k, _)| k == d).copied().unwrap_or((*d, 0));
                        v.to_string()
                    }
                })
                .collect();
            format!(
                "{FILL_PREAMBLE} Adjust the unknown dimension of HSL color to match the following \
                 object as well as possible: {object}. Color: [{}]",
                slots.join(", ")
            )
        }
    }
}

/// Canonical reply text for an answer, in the format each prompt asks for.
pub fn render_answer(answer: &Answer) -> String {
    match answer {
        Answer::ColorCode(c) => format!("{}, {}, {}", c.h(), c.s(), c.l()),
        Answer::YesNo(true) => "yes".into(),
        Answer::YesNo(false) => "no".into(),
        Answer::Choice(Choice::A) => "A".into(),
        Answer::Choice(Choice::B) => "B".into(),
        Answer::DimensionValue(v) => v.to_string(),
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap());
static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z]+").unwrap());

fn numbers(raw: &str) -> Vec<f64> {
    NUMBER.find_iter(raw).filter_map(|m| m.as_str().parse().ok()).collect()
}

fn malformed(raw: &str, expected: &'static str) -> RespondentError {
    RespondentError::MalformedAnswer { raw: raw.to_string(), expected }
}

/// Parses a reply to `query`.
///
/// Accepts `h, s, l` or `[h, s, l]` for colors, case-insensitive yes/no,
/// `A`/`B` possibly inside `Option A`, and a lone integer for fills.
pub fn parse_answer(query: &Query, raw: &str) -> Result<Answer, RespondentError> {
    let text = raw.trim();
    match query.kind() {
        QueryKind::ReportColor => {
            let nums = numbers(text);
            if nums.len() != 3 {
                return Err(malformed(raw, "an 'h, s, l' color code"));
            }
            canonicalize(nums[0], nums[1], nums[2])
                .map(Answer::ColorCode)
                .map_err(|_| malformed(raw, "an 'h, s, l' color code"))
        }
        QueryKind::MatchJudgment => {
            let words: Vec<String> = WORD.find_iter(text).map(|m| m.as_str().to_ascii_lowercase()).collect();
            let yes = words.iter().any(|w| w == "yes");
            let no = words.iter().any(|w| w == "no");
            match (yes, no) {
                (true, false) => Ok(Answer::YesNo(true)),
                (false, true) => Ok(Answer::YesNo(false)),
                _ => Err(malformed(raw, "'yes' or 'no'")),
            }
        }
        QueryKind::PairwiseChoice => {
            let words: Vec<&str> = WORD.find_iter(text).map(|m| m.as_str()).collect();
            // a lone lowercase letter is a choice; inside a sentence only capitals count
            let lone = words.len() == 1;
            let is = |w: &str, letter: &str| w == letter || (lone && w.eq_ignore_ascii_case(letter));
            let a = words.iter().any(|w| is(w, "A"));
            let b = words.iter().any(|w| is(w, "B"));
            match (a, b) {
                (true, false) => Ok(Answer::Choice(Choice::A)),
                (false, true) => Ok(Answer::Choice(Choice::B)),
                _ => Err(malformed(raw, "'A' or 'B'")),
            }
        }
        QueryKind::DimensionFill => {
            let nums = numbers(text);
            match nums.as_slice() {
                [v] => Ok(Answer::DimensionValue(v.round() as i64)),
                _ => Err(malformed(raw, "a single integer")),
            }
        }
    }
}
