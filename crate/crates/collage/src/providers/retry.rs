//! Bounded retry with exponential backoff and full jitter.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub base_delay_ms: u64,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay_ms: 500, factor: 2.0 }
    }
}

/// Result of one attempt as seen by the retry loop.
#[derive(Debug)]
pub enum Attempt<T> {
    Done(T),
    /// Worth retrying; carries the error to surface if the budget runs out.
    Retry(ProviderError),
    Fatal(ProviderError),
}

impl RetryPolicy {
    pub fn no_delay(attempts: u32) -> Self {
        Self { attempts, base_delay_ms: 0, factor: 1.0 }
    }

    /// Upper bound of the jittered delay before retry number `retry` (0-based).
    pub fn cap(&self, retry: u32) -> Duration {
        let ms = self.base_delay_ms as f64 * self.factor.powi(retry as i32);
        Duration::from_millis(ms as u64)
    }

    /// Runs `op` until it succeeds, fails fatally, or attempts run out.
    /// `op` must send identical bytes on every call.
    pub fn run<T>(&self, mut op: impl FnMut(u32) -> Attempt<T>) -> Result<T, ProviderError> {
        let attempts = self.attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            match op(attempt) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => {
                    log::debug!("attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                    if attempt + 1 < attempts {
                        let cap = self.cap(attempt).as_millis() as u64;
                        if cap > 0 {
                            let ms = rand::rng().random_range(0..=cap);
                            std::thread::sleep(Duration::from_millis(ms));
                        }
                    }
                }
            }
        }
        Err(match last {
            Some(ProviderError::RateLimited { .. }) => ProviderError::RateLimited { attempts },
            Some(e) => e,
            None => ProviderError::Transport("no attempt made".into()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delays_grow_geometrically() {
        let p = RetryPolicy::default();
        assert_eq!(p.cap(0), Duration::from_millis(500));
        assert_eq!(p.cap(1), Duration::from_millis(1000));
        assert_eq!(p.cap(2), Duration::from_millis(2000));
    }

    #[test]
    fn exhausted_rate_limit_reports_attempts() {
        let mut calls = 0;
        let r: Result<(), _> = RetryPolicy::no_delay(3).run(|_| {
            calls += 1;
            Attempt::Retry(ProviderError::RateLimited { attempts: 1 })
        });
        assert_eq!(calls, 3);
        assert_eq!(r, Err(ProviderError::RateLimited { attempts: 3 }));
    }

    #[test]
    fn fatal_stops_immediately() {
        let mut calls = 0;
        let r: Result<(), _> = RetryPolicy::no_delay(3).run(|_| {
            calls += 1;
            Attempt::Fatal(ProviderError::Auth { status: 401 })
        });
        assert_eq!(calls, 1);
        assert_eq!(r, Err(ProviderError::Auth { status: 401 }));
    }

    #[test]
    fn recovers_after_transient_failure() {
        let r = RetryPolicy::no_delay(3).run(|n| {
            if n == 0 {
                Attempt::Retry(ProviderError::Transport("503".into()))
            } else {
                Attempt::Done(n)
            }
        });
        assert_eq!(r, Ok(1));
    }
}
