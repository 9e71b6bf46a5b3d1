//! Telemetry records and their newline-delimited text form.
//!
//! One record per line: `timestamp_iso8601, parameter_id, value`. Values are
//! written with the shortest decimal that parses back to the same `f64`, so a
//! write/read cycle is bit-exact. Lines may appear in any order; blank lines
//! and `#` comments are skipped.

use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, ParamId};
use crate::error::{Error, Result};
use crate::time::{format_iso, parse_iso};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Simulator,
    #[default]
    File,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub timestamp: DateTime<Utc>,
    pub parameter: ParamId,
    pub value: f64,
    pub source: Source,
}

impl TelemetryRecord {
    pub fn new(timestamp: DateTime<Utc>, parameter: ParamId, value: f64, source: Source) -> Self {
        TelemetryRecord {
            timestamp,
            parameter,
            value,
            source,
        }
    }
}

pub fn format_record(catalog: &Catalog, r: &TelemetryRecord) -> String {
    format!(
        "{}, {}, {}",
        format_iso(r.timestamp),
        catalog.name(r.parameter),
        r.value
    )
}

pub fn write_records<'a, W, I>(mut out: W, catalog: &Catalog, records: I) -> Result<usize>
where
    W: Write,
    I: IntoIterator<Item = &'a TelemetryRecord>,
{
    let mut n = 0;
    for r in records {
        writeln!(out, "{}", format_record(catalog, r))?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Parses one non-comment line. Unknown parameter ids yield
/// [`Error::UnknownParameter`] so callers can count and skip them.
pub fn parse_record(catalog: &Catalog, line: &str, lineno: usize, source: Source) -> Result<TelemetryRecord> {
    let bad = |message: String| Error::RecordParse { line: lineno, message };
    let mut cols = line.splitn(3, ',');
    let (Some(ts), Some(id), Some(value)) = (cols.next(), cols.next(), cols.next()) else {
        return Err(bad(format!("expected 3 comma-separated columns in `{line}`")));
    };
    let timestamp = parse_iso(ts).ok_or_else(|| bad(format!("bad timestamp `{}`", ts.trim())))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad value `{}`", value.trim())))?;
    let parameter = catalog.id(id.trim())?;
    Ok(TelemetryRecord::new(timestamp, parameter, value, source))
}

/// Streams records from a reader. Each item carries its own parse result, so
/// one malformed line does not abort the whole import.
pub struct RecordReader<'c, R> {
    catalog: &'c Catalog,
    lines: std::io::Lines<R>,
    lineno: usize,
    source: Source,
}

impl<'c, R: BufRead> RecordReader<'c, R> {
    pub fn new(catalog: &'c Catalog, reader: R) -> Self {
        RecordReader {
            catalog,
            lines: reader.lines(),
            lineno: 0,
            source: Source::File,
        }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }
}

impl<R: BufRead> Iterator for RecordReader<'_, R> {
    type Item = Result<TelemetryRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.lineno += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(parse_record(self.catalog, trimmed, self.lineno, self.source));
        }
    }
}

/// Reads a whole file, failing on the first malformed or unknown line.
pub fn read_records(catalog: &Catalog, reader: impl BufRead) -> Result<Vec<TelemetryRecord>> {
    RecordReader::new(catalog, reader).collect()
}
