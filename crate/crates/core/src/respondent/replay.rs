use super::{Answer, Query, Respondent, RespondentError, Response};

/// One recorded exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayEntry {
    pub query: Query,
    pub raw: String,
    pub answer: Answer,
}

/// Answers by reading back a recorded transcript, in order.
#[derive(Debug, Clone)]
pub struct ReplayRespondent {
    entries: Vec<ReplayEntry>,
    cursor: usize,
}

impl ReplayRespondent {
    pub fn new(entries: Vec<ReplayEntry>) -> Self {
        Self { entries, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.cursor
    }
}

impl Respondent for ReplayRespondent {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        let entry = self
            .entries
            .get(self.cursor)
            .ok_or(RespondentError::ReplayExhausted(self.entries.len()))?;
        if &entry.query != query {
            return Err(RespondentError::ReplayDivergence {
                index: self.cursor,
                expected: format!("{:?}", entry.query),
                actual: format!("{query:?}"),
            });
        }
        self.cursor += 1;
        Ok(Response { answer: entry.answer.clone(), raw: entry.raw.clone() })
    }
}
