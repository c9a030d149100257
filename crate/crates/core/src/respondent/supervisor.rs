use std::thread;
use std::time::Duration;

use super::{Query, Respondent, RespondentError, Response};

/// Wraps a respondent and retries transport failures with a linear backoff.
/// Parse failures and other errors pass straight through.
#[derive(Debug, Clone)]
pub struct Supervised<R> {
    inner: R,
    transport_retries: u32,
    backoff: Duration,
}

impl<R> Supervised<R> {
    pub fn new(inner: R, transport_retries: u32, backoff: Duration) -> Self {
        Self { inner, transport_retries, backoff }
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: Respondent> Respondent for Supervised<R> {
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        let mut attempt = 0;
        loop {
            match self.inner.answer(query) {
                Err(e) if e.is_retryable() && attempt < self.transport_retries => {
                    attempt += 1;
                    thread::sleep(self.backoff * attempt);
                }
                other => return other,
            }
        }
    }

    fn wall_clock(&self) -> bool {
        self.inner.wall_clock()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::respondent::{Answer, Choice};

    struct Flaky {
        failures: u32,
        calls: u32,
    }

    impl Respondent for Flaky {
        fn answer(&mut self, _: &Query) -> Result<Response, RespondentError> {
            self.calls += 1;
            if self.calls <= self.failures {
                Err(RespondentError::TransportError("connection reset".into()))
            } else {
                Ok(Response { answer: Answer::Choice(Choice::A), raw: "A".into() })
            }
        }
    }

    fn query() -> Query {
        Query::ReportColor { object: "lemon".into() }
    }

    #[test]
    fn retries_transport_errors() {
        let mut s = Supervised::new(Flaky { failures: 2, calls: 0 }, 2, Duration::ZERO);
        assert!(s.answer(&query()).is_ok());
        assert_eq!(s.into_inner().calls, 3);
    }

    #[test]
    fn gives_up_after_the_budget() {
        let mut s = Supervised::new(Flaky { failures: 5, calls: 0 }, 2, Duration::ZERO);
        assert!(matches!(s.answer(&query()), Err(RespondentError::TransportError(_))));
        assert_eq!(s.into_inner().calls, 3);
    }
}
