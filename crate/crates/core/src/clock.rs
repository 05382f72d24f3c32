//! Wall clock, or a frozen one for deterministic deadline tests.

use std::str::FromStr;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Duration, Utc};

#[derive(Debug, Clone)]
pub enum Clock {
    System,
    /// Shared between clones, so advancing one advances all.
    Frozen(Arc<RwLock<DateTime<Utc>>>),
}

impl Clock {
    pub fn frozen(at: DateTime<Utc>) -> Self {
        Clock::Frozen(Arc::new(RwLock::new(at)))
    }

    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Frozen(t) => *t.read().unwrap_or_else(|e| e.into_inner()),
        }
    }

    /// No effect on the system clock.
    pub fn set(&self, at: DateTime<Utc>) {
        if let Clock::Frozen(t) = self {
            *t.write().unwrap_or_else(|e| e.into_inner()) = at;
        }
    }

    pub fn advance(&self, by: Duration) {
        self.set(self.now() + by);
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, Clock::Frozen(_))
    }
}

/// `system` or `frozen:<RFC 3339 timestamp>`.
impl FromStr for Clock {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "system" | "" => Ok(Clock::System),
            other => {
                let at = other
                    .strip_prefix("frozen:")
                    .ok_or_else(|| format!("clock mode must be `system` or `frozen:<timestamp>`, got {other:?}"))?;
                DateTime::parse_from_rfc3339(at)
                    .map(|t| Clock::frozen(t.with_timezone(&Utc)))
                    .map_err(|e| format!("bad frozen timestamp {at:?}: {e}"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_clock_is_shared() {
        let c: Clock = "frozen:2026-03-01T00:00:00Z".parse().unwrap();
        let other = c.clone();
        c.advance(Duration::days(2));
        assert_eq!(other.now().to_rfc3339(), "2026-03-03T00:00:00+00:00");
        assert!("frozen:yesterday".parse::<Clock>().is_err());
        assert!(matches!("system".parse::<Clock>(), Ok(Clock::System)));
    }
}
