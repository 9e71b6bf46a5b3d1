//! JSON documents exchanged over the API.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use twin_core::{Catalog, FrameSeries, NormalizationStats, Source, TelemetryRecord};
use twin_forecast::{Provenance, Timescale};
use twin_weather::WindField;

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDoc {
    pub timestamp: DateTime<Utc>,
    pub parameter: String,
    pub value: f64,
    #[serde(default = "live")]
    pub source: Source,
}

fn live() -> Source {
    Source::Live
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestDoc {
    pub records: Vec<RecordDoc>,
}

impl IngestDoc {
    pub fn from_records(catalog: &Catalog, records: &[TelemetryRecord]) -> Self {
        let records = records
            .iter()
            .map(|r| RecordDoc {
                timestamp: r.timestamp,
                parameter: catalog.name(r.parameter).to_string(),
                value: r.value,
                source: r.source,
            })
            .collect();
        IngestDoc { records }
    }
}

/// A resampled series. `values` is null where a cell has no data yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub start: DateTime<Utc>,
    pub step_seconds: i64,
    pub parameters: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub values: Vec<Vec<Option<f64>>>,
    pub padded: Vec<Vec<bool>>,
    pub stats: NormalizationStats,
}

impl SeriesDoc {
    pub fn from_frames(catalog: &Catalog, frames: &FrameSeries) -> Self {
        let rows = 0..frames.len();
        SeriesDoc {
            start: frames.start,
            step_seconds: frames.step.num_seconds(),
            parameters: frames.parameters.iter().map(|p| catalog.name(*p).to_string()).collect(),
            timestamps: rows.clone().map(|r| frames.timestamp(r)).collect(),
            values: frames
                .values
                .rows()
                .into_iter()
                .enumerate()
                .map(|(r, row)| row.iter().enumerate().map(|(c, v)| (!frames.missing(r, c)).then_some(*v)).collect())
                .collect(),
            padded: rows.map(|r| (0..frames.parameters.len()).map(|c| frames.padded(r, c)).collect()).collect(),
            stats: frames.stats.clone(),
        }
    }
}

/// One stream event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub seq: u64,
    pub ts: DateTime<Utc>,
    pub values: Vec<Option<f64>>,
    pub padded: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDoc {
    pub model: String,
    pub kind: String,
    pub provenance: Provenance,
    pub timescale: Timescale,
    pub at: DateTime<Utc>,
    pub parameters: Vec<String>,
    /// Forecast instants, one per row of `values`.
    pub timestamps: Vec<DateTime<Utc>>,
    /// `[k][l]` in raw units.
    pub values: Vec<Vec<f64>>,
    /// Fingerprint of the normalization stats, absent for persistence.
    pub norm_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFieldDoc {
    pub stale: bool,
    pub field: WindField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub id: String,
    pub kind: String,
    pub provenance: Provenance,
    pub timescale: Timescale,
    pub m: usize,
    pub k: usize,
    pub parameters: Vec<String>,
}

/// Comma-separated parameter keys; empty or absent means none.
pub fn parse_params(catalog: &Catalog, text: Option<&str>) -> Result<Vec<twin_core::ParamId>, ApiError> {
    text.unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| catalog.id(s).map_err(|_| ApiError::UnknownParameter(s.to_string())))
        .collect()
}

pub fn parse_time(name: &str, text: &str) -> Result<DateTime<Utc>, ApiError> {
    twin_core::time::parse_iso(text).ok_or_else(|| ApiError::BadRequest(format!("`{name}` is not an ISO-8601 instant: {text}")))
}
