//! Service-day timestamps.
//!
//! GTFS counts seconds from midnight of the service date and allows values past
//! 24:00:00 for trips running after midnight. We accept up to 47:59:59.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub const SECS_PER_DAY: u32 = 86_400;
pub const MAX_SERVICE_SECS: u32 = 2 * SECS_PER_DAY;

/// Parse `HH:MM:SS` (hours may exceed 23) into seconds since service midnight.
pub fn parse_service_time(s: &str) -> Option<u32> {
    let mut parts = s.trim().split(':');
    let h: u32 = parts.next()?.trim().parse().ok()?;
    let m: u32 = parts.next()?.parse().ok()?;
    let sec: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || m > 59 || sec > 59 {
        return None;
    }
    let total = h * 3600 + m * 60 + sec;
    (total < MAX_SERVICE_SECS).then_some(total)
}

pub fn format_service_time(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, (secs / 60) % 60, secs % 60)
}

/// A moment on a service day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub date: NaiveDate,
    /// Seconds since midnight of `date`, in `[0, 48h)`.
    pub secs: u32,
}

impl Timestamp {
    pub fn new(date: NaiveDate, secs: u32) -> Self {
        Self { date, secs }
    }

    /// Parse `YYYY-MM-DD HH:MM:SS` (a `T` separator is accepted too).
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (d, t) = s.split_once([' ', 'T'])?;
        let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()?;
        let secs = parse_service_time(t)?;
        Some(Self { date, secs })
    }

    /// Seconds within the civil day, wrapping overflow times.
    pub fn time_of_day(&self) -> u32 {
        self.secs % SECS_PER_DAY
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.date.format("%Y-%m-%d"), format_service_time(self.secs))
    }
}
