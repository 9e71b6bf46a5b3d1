//! Millisecond timestamp helpers shared by the store, the simulator and the wire formats.

use chrono::{DateTime, SecondsFormat, TimeDelta, TimeZone, Utc};

pub fn to_millis(t: DateTime<Utc>) -> i64 {
    t.timestamp_millis()
}

pub fn from_millis(ms: i64) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(ms)
        .single()
        .expect("timestamp within chrono's representable range")
}

/// ISO-8601 UTC with `Z` suffix; fractional seconds only when present.
pub fn format_iso(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_iso(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Grid instants are integer multiples of `step_ms` from the UNIX epoch.
pub fn floor_to_grid(ms: i64, step_ms: i64) -> i64 {
    ms.div_euclid(step_ms) * step_ms
}

pub fn ceil_to_grid(ms: i64, step_ms: i64) -> i64 {
    let f = floor_to_grid(ms, step_ms);
    if f == ms {
        f
    } else {
        f + step_ms
    }
}

pub fn seconds(s: i64) -> TimeDelta {
    TimeDelta::seconds(s)
}
