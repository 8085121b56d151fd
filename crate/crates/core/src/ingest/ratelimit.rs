use std::collections::BTreeMap;
use std::time::Duration;

/// Token bucket over request budget per hour. Times are seconds on any
/// monotonic scale chosen by the caller.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    capacity: f64,
    tokens: f64,
    refill_per_sec: f64,
    last: f64,
    /// No request before this time (set from a reset header at zero remaining).
    blocked_until: f64,
}

impl TokenBucket {
    pub fn new(max_requests_per_hour: u32, now: f64) -> Self {
        let capacity = f64::from(max_requests_per_hour.max(1));
        TokenBucket {
            capacity,
            tokens: capacity,
            refill_per_sec: capacity / 3600.0,
            last: now,
            blocked_until: f64::NEG_INFINITY,
        }
    }

    fn refill(&mut self, now: f64) {
        if now > self.last {
            self.tokens = (self.tokens + (now - self.last) * self.refill_per_sec).min(self.capacity);
            self.last = now;
        }
    }

    /// Takes one token and returns how long the caller must wait first.
    pub fn acquire(&mut self, now: f64) -> Duration {
        self.refill(now);
        let mut wait = (self.blocked_until - now).max(0.0);
        if self.tokens < 1.0 {
            wait = wait.max((1.0 - self.tokens) / self.refill_per_sec);
        }
        self.tokens -= 1.0;
        Duration::from_secs_f64(wait)
    }

    /// Seeds the bucket from `x-ratelimit-remaining` / `x-ratelimit-reset`.
    /// `now_unix` converts the reset epoch into the bucket's time scale.
    pub fn observe(&mut self, headers: &BTreeMap<String, String>, now: f64, now_unix: i64) {
        let remaining = headers
            .get("x-ratelimit-remaining")
            .and_then(|v| v.trim().parse::<f64>().ok());
        let reset = headers
            .get("x-ratelimit-reset")
            .and_then(|v| v.trim().parse::<i64>().ok());
        if let Some(rem) = remaining {
            self.refill(now);
            self.tokens = self.tokens.min(rem);
            if rem < 1.0 {
                if let Some(reset) = reset {
                    self.blocked_until = now + (reset - now_unix).max(0) as f64;
                }
            }
        }
    }
}
