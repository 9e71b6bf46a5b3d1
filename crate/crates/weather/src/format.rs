//! Plain-text grid payload.
//!
//! ```text
//! # twin wind field v1
//! source: met-fixture
//! issued_at: 2022-02-01T00:00:00Z
//! bbox: 4 60 6 61
//! nx: 3
//! ny: 2
//! times: 2022-02-01T00:00:00Z 2022-02-01T03:00:00Z
//! u 2022-02-01T00:00:00Z
//! 1.5 2 2.5
//! 1 1 1
//! v 2022-02-01T00:00:00Z
//! ...
//! ```
//!
//! One `u` block then one `v` block per time, `ny` rows of `nx` values each,
//! southernmost row first. Values are written in shortest round-trip form.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::error::{parse_err, Result};
use crate::field::{BBox, WindField};

const MAGIC: &str = "# twin wind field v1";

fn iso(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_time(s: &str, line: usize) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| parse_err(line, format!("bad timestamp `{s}`: {e}")))
}

pub fn write_field(field: &WindField) -> String {
    let b = &field.bbox;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "source: {}", field.source);
    let _ = writeln!(out, "issued_at: {}", iso(field.issued_at));
    let _ = writeln!(out, "bbox: {} {} {} {}", b.lon_min, b.lat_min, b.lon_max, b.lat_max);
    let _ = writeln!(out, "nx: {}", field.nx);
    let _ = writeln!(out, "ny: {}", field.ny);
    let times: Vec<String> = field.times.iter().map(|t| iso(*t)).collect();
    let _ = writeln!(out, "times: {}", times.join(" "));
    for (t, stamp) in times.iter().enumerate() {
        for (name, data) in [("u", &field.u), ("v", &field.v)] {
            let _ = writeln!(out, "{name} {stamp}");
            for j in 0..field.ny {
                let start = field.index(t, j, 0);
                let row: Vec<String> = data[start..start + field.nx].iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.last = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(parse_err(self.last + 1, "unexpected end of payload")),
            }
        }
    }

    fn header(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(':'))
            .map(str::trim)
            .ok_or_else(|| parse_err(self.last, format!("expected `{key}:`")))
    }
}

fn number<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, format!("bad number `{s}`")))
}

pub fn parse_field(text: &str) -> Result<WindField> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    if lines.next()? != MAGIC {
        return Err(parse_err(lines.last, format!("expected `{MAGIC}`")));
    }
    let source = lines.header("source")?.to_string();
    let issued_at = parse_time(lines.header("issued_at")?, lines.last)?;
    let bbox_text = lines.header("bbox")?;
    let bbox: BBox = bbox_text.parse().map_err(|e| parse_err(lines.last, format!("{e}")))?;
    let nx: usize = number(lines.header("nx")?, lines.last)?;
    let ny: usize = number(lines.header("ny")?, lines.last)?;
    let times = lines
        .header("times")?
        .split_whitespace()
        .map(|s| parse_time(s, lines.last))
        .collect::<Result<Vec<_>>>()?;
    let mut u = Vec::with_capacity(times.len() * nx * ny);
    let mut v = Vec::with_capacity(times.len() * nx * ny);
    for t in &times {
        for (name, data) in [("u", &mut u), ("v", &mut v)] {
            let head = lines.next()?;
            let expected = format!("{name} {}", iso(*t));
            let stamp = head.strip_prefix(name).map(str::trim).unwrap_or("");
            if stamp.is_empty() || parse_time(stamp, lines.last)? != *t {
                return Err(parse_err(lines.last, format!("expected `{expected}`")));
            }
            for _ in 0..ny {
                let row = lines.next()?;
                let before = data.len();
                for s in row.split_whitespace() {
                    data.push(number::<f64>(s, lines.last)?);
                }
                if data.len() - before != nx {
                    return Err(parse_err(lines.last, format!("expected {nx} values, got {}", data.len() - before)));
                }
            }
        }
    }
    if let Ok(extra) = lines.next() {
        return Err(parse_err(lines.last, format!("trailing content `{extra}`")));
    }
    WindField::new(source, issued_at, bbox, nx, ny, times, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::WeatherError;

    const SAMPLE: &str = "# twin wind field v1
source: fixture
issued_at: 2022-02-01T00:00:00Z
bbox: 4 60 5 61
nx: 2
ny: 2
times: 2022-02-01T00:00:00Z
u 2022-02-01T00:00:00Z
1 2
3 4
v 2022-02-01T00:00:00Z
-1 -2
-3 0.1
";

    #[test]
    fn parses_and_writes_back_identically() {
        let f = parse_field(SAMPLE).unwrap();
        assert_eq!((f.nx, f.ny, f.times.len()), (2, 2, 1));
        assert_eq!(f.node(0, 1, 1), (4.0, 0.1));
        assert_eq!(write_field(&f), SAMPLE);
    }

    #[test]
    fn reports_line_numbers() {
        let broken = SAMPLE.replace("3 4", "3 x");
        match parse_field(&broken) {
            Err(WeatherError::Parse { line, .. }) => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
        assert!(parse_field(&SAMPLE.replace("-3 0.1", "-3")).is_err());
        assert!(parse_field(&SAMPLE.replace("nx: 2", "nx: 3")).is_err());
        assert!(parse_field(&format!("{SAMPLE}extra\n")).is_err());
        assert!(parse_field("").is_err());
    }
}
