//! Append-oriented telemetry store with causal resampling.
//!
//! Raw records arrive in any order. Each parameter keeps its own time-sorted
//! column, so queries are binary searches and resampling is one forward scan
//! per parameter. Resampled cells only ever look backwards: the value at grid
//! instant `t` is the latest record at or before `t`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, TimeDelta, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Catalog, ParamId};
use crate::error::{Error, Result};
use crate::record::{write_records, RecordReader, Source, TelemetryRecord};
use crate::time::{ceil_to_grid, floor_to_grid, from_millis, to_millis};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected_unphysical: usize,
    pub deduplicated: usize,
    pub unknown_parameter: usize,
}

impl IngestReport {
    pub fn merge(&mut self, other: IngestReport) {
        self.accepted += other.accepted;
        self.rejected_unphysical += other.rejected_unphysical;
        self.deduplicated += other.deduplicated;
        self.unknown_parameter += other.unknown_parameter;
    }

    pub fn total(&self) -> usize {
        self.accepted + self.rejected_unphysical + self.deduplicated + self.unknown_parameter
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Series {
    times: Vec<i64>,
    values: Vec<f64>,
    sources: Vec<Source>,
}

impl Series {
    fn len(&self) -> usize {
        self.times.len()
    }

    /// Index range of records with `from <= t <= to`.
    fn range(&self, from: i64, to: i64) -> std::ops::Range<usize> {
        let lo = self.times.partition_point(|&t| t < from);
        let hi = self.times.partition_point(|&t| t <= to);
        lo..hi.max(lo)
    }
}

type Entry = (i64, f64, Source);

#[derive(Debug, Clone)]
pub struct TimeSeriesStore {
    catalog: Arc<Catalog>,
    series: Vec<Series>,
}

impl PartialEq for TimeSeriesStore {
    fn eq(&self, other: &Self) -> bool {
        self.series == other.series
    }
}

impl TimeSeriesStore {
    pub fn new(catalog: Arc<Catalog>) -> Self {
        let series = vec![Series::default(); catalog.len()];
        TimeSeriesStore { catalog, series }
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.series.iter().map(Series::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.series.iter().all(|s| s.times.is_empty())
    }

    /// Earliest and latest stored timestamps across all parameters.
    pub fn time_span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        let first = self.series.iter().filter_map(|s| s.times.first()).min()?;
        let last = self.series.iter().filter_map(|s| s.times.last()).max()?;
        Some((from_millis(*first), from_millis(*last)))
    }

    pub fn first_time(&self, p: ParamId) -> Option<DateTime<Utc>> {
        self.series.get(p.index())?.times.first().map(|&t| from_millis(t))
    }

    /// Validates, sorts and merges a batch. Identical (timestamp, parameter)
    /// pairs keep the last-arriving value; each collapse counts as one
    /// deduplication. Every input record lands in exactly one report bucket.
    pub fn ingest_batch(&mut self, records: &[TelemetryRecord]) -> IngestReport {
        let mut report = IngestReport::default();
        let mut per_param: Vec<Vec<Entry>> = vec![Vec::new(); self.series.len()];
        for r in records {
            if !self.catalog.contains(r.parameter) {
                report.unknown_parameter += 1;
                continue;
            }
            if !self.catalog.is_physical_id(r.parameter, r.value) {
                report.rejected_unphysical += 1;
                continue;
            }
            per_param[r.parameter.index()].push((to_millis(r.timestamp), r.value, r.source));
        }
        for (p, mut batch) in per_param.into_iter().enumerate() {
            if batch.is_empty() {
                continue;
            }
            // Stable: ties keep arrival order, so the last one wins below.
            batch.sort_by_key(|e| e.0);
            let mut collapsed: Vec<Entry> = Vec::with_capacity(batch.len());
            for e in batch {
                match collapsed.last_mut() {
                    Some(last) if last.0 == e.0 => {
                        *last = e;
                        report.deduplicated += 1;
                    }
                    _ => collapsed.push(e),
                }
            }
            let (accepted, dedup) = merge_into(&mut self.series[p], collapsed);
            report.accepted += accepted;
            report.deduplicated += dedup;
        }
        report
    }

    /// All stored records of `params` with `from <= timestamp <= to`, ordered
    /// by time and then by the position of the parameter in `params`.
    pub fn query(
        &self,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
        params: &[ParamId],
    ) -> Result<Vec<TelemetryRecord>> {
        check_range(from, to)?;
        self.check_params(params)?;
        let (from_ms, to_ms) = (to_millis(from), to_millis(to));
        let mut out: Vec<(i64, usize, TelemetryRecord)> = Vec::new();
        for (pos, &p) in params.iter().enumerate() {
            let s = &self.series[p.index()];
            for i in s.range(from_ms, to_ms) {
                out.push((
                    s.times[i],
                    pos,
                    TelemetryRecord::new(from_millis(s.times[i]), p, s.values[i], s.sources[i]),
                ));
            }
        }
        out.sort_by_key(|(t, pos, _)| (*t, *pos));
        Ok(out.into_iter().map(|(_, _, r)| r).collect())
    }

    /// Resamples onto the grid of integer multiples of `step` inside
    /// `[from, to]`, forward-filling from the latest record at or before each
    /// grid instant.
    pub fn resample(
        &self,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
        params: &[ParamId],
        step: TimeDelta,
    ) -> Result<FrameSeries> {
        check_range(from, to)?;
        self.check_params(params)?;
        let step_ms = step_millis(step)?;
        let first = ceil_to_grid(to_millis(from), step_ms);
        let last = floor_to_grid(to_millis(to), step_ms);
        let rows = if last >= first {
            ((last - first) / step_ms + 1) as usize
        } else {
            0
        };

        let mut values = Array2::from_elem((rows, params.len()), f64::NAN);
        let mut cells = Array2::from_elem((rows, params.len()), Cell::Missing);
        for (c, &p) in params.iter().enumerate() {
            let s = &self.series[p.index()];
            let mut next = 0usize;
            for r in 0..rows {
                let g = first + r as i64 * step_ms;
                if r == 0 {
                    next = s.times.partition_point(|&t| t <= g);
                } else {
                    while next < s.len() && s.times[next] <= g {
                        next += 1;
                    }
                }
                if next == 0 {
                    continue;
                }
                let latest = next - 1;
                values[[r, c]] = s.values[latest];
                cells[[r, c]] = if s.times[latest] > g - step_ms {
                    Cell::Fresh
                } else {
                    Cell::Padded
                };
            }
        }

        let names: Vec<String> = params.iter().map(|&p| self.catalog.name(p).to_string()).collect();
        let stats = NormalizationStats::from_columns(
            &names,
            (0..params.len()).map(|c| {
                values
                    .column(c)
                    .iter()
                    .zip(cells.column(c))
                    .filter(|(_, cell)| **cell != Cell::Missing)
                    .map(|(v, _)| *v)
                    .collect::<Vec<f64>>()
            }),
        );
        Ok(FrameSeries {
            start: from_millis(first),
            step,
            parameters: params.to_vec(),
            values,
            cells,
            stats,
        })
    }

    /// Exact min/max over raw records in `[from, to]`.
    pub fn normalization_stats(
        &self,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
        params: &[ParamId],
    ) -> Result<NormalizationStats> {
        check_range(from, to)?;
        self.check_params(params)?;
        let (from_ms, to_ms) = (to_millis(from), to_millis(to));
        let mut out = Vec::with_capacity(params.len());
        for &p in params {
            let s = &self.series[p.index()];
            let name = self.catalog.name(p);
            let stats = ParamStats::from_values(name, s.values[s.range(from_ms, to_ms)].iter().copied())
                .ok_or_else(|| Error::EmptyRange(name.to_string()))?;
            out.push(stats);
        }
        Ok(NormalizationStats { params: out })
    }

    /// The `m` most recent resampled rows ending at `at` (floored to the
    /// grid), oldest first.
    pub fn window(
        &self,
        at: DateTime<Utc>,
        m: usize,
        params: &[ParamId],
        step: TimeDelta,
    ) -> Result<Array2<f64>> {
        let step_ms = step_millis(step)?;
        if m == 0 {
            return Err(Error::InsufficientHistory { at, needed: 0 });
        }
        let end = floor_to_grid(to_millis(at), step_ms);
        let start = end - (m as i64 - 1) * step_ms;
        let frames = self.resample(from_millis(start), from_millis(end), params, step)?;
        if frames.len() != m || frames.cells.iter().any(|c| *c == Cell::Missing) {
            return Err(Error::InsufficientHistory { at, needed: m });
        }
        Ok(frames.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<usize> {
        let all: Vec<ParamId> = self.catalog.ids().collect();
        let records = match self.time_span() {
            Some((a, b)) => self.query(a, b, &all)?,
            None => Vec::new(),
        };
        let out = BufWriter::new(File::create(path)?);
        write_records(out, &self.catalog, &records)
    }

    /// Loads a record file into a fresh store. Unknown parameters are counted
    /// in the report; malformed lines abort the load.
    pub fn load(catalog: Arc<Catalog>, path: impl AsRef<Path>) -> Result<(Self, IngestReport)> {
        let mut store = TimeSeriesStore::new(catalog.clone());
        let mut report = IngestReport::default();
        let mut batch = Vec::with_capacity(1 << 16);
        let reader = RecordReader::new(&catalog, BufReader::new(File::open(path)?));
        for rec in reader {
            match rec {
                Ok(r) => batch.push(r),
                Err(Error::UnknownParameter(_)) => report.unknown_parameter += 1,
                Err(e) => return Err(e),
            }
            if batch.len() == batch.capacity() {
                report.merge(store.ingest_batch(&batch));
                batch.clear();
            }
        }
        report.merge(store.ingest_batch(&batch));
        Ok((store, report))
    }

    fn check_params(&self, params: &[ParamId]) -> Result<()> {
        match params.iter().find(|p| !self.catalog.contains(**p)) {
            Some(p) => Err(Error::UnknownParameter(format!("#{}", p.0))),
            None => Ok(()),
        }
    }
}

fn check_range(from: DateTime<Utc>, to: DateTime<Utc>) -> Result<()> {
    if from > to {
        Err(Error::InvalidRange { from, to })
    } else {
        Ok(())
    }
}

fn step_millis(step: TimeDelta) -> Result<i64> {
    let ms = step.num_milliseconds();
    if ms <= 0 || TimeDelta::milliseconds(ms) != step {
        return Err(Error::InvalidStep(format!(
            "step must be a positive whole number of milliseconds, got {step}"
        )));
    }
    Ok(ms)
}

/// Merges a sorted, tie-free batch into a series; batch entries win ties.
/// Returns (new entries, overwritten entries).
fn merge_into(series: &mut Series, batch: Vec<Entry>) -> (usize, usize) {
    let appendable = series.times.last().is_none_or(|&t| batch[0].0 > t);
    if appendable {
        let n = batch.len();
        series.times.reserve(n);
        series.values.reserve(n);
        series.sources.reserve(n);
        for (t, v, s) in batch {
            series.times.push(t);
            series.values.push(v);
            series.sources.push(s);
        }
        return (n, 0);
    }

    let total = series.len() + batch.len();
    let mut merged = Series {
        times: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        sources: Vec::with_capacity(total),
    };
    let (mut accepted, mut dedup) = (0, 0);
    let mut i = 0;
    let mut incoming = batch.into_iter().peekable();
    loop {
        let take_old = match (series.times.get(i), incoming.peek()) {
            (None, None) => break,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(&old), Some(&(new, _, _))) => {
                if old == new {
                    i += 1;
                    dedup += 1;
                    false
                } else {
                    old < new
                }
            }
        };
        if take_old {
            merged.times.push(series.times[i]);
            merged.values.push(series.values[i]);
            merged.sources.push(series.sources[i]);
            i += 1;
        } else {
            let (t, v, s) = incoming.next().expect("peeked");
            merged.times.push(t);
            merged.values.push(v);
            merged.sources.push(s);
            accepted += 1;
        }
    }
    *series = merged;
    (accepted - dedup, dedup)
}

/// Provenance of one resampled cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    /// A raw record exists in `(t - step, t]`.
    Fresh,
    /// Forward-filled from an older record.
    Padded,
    /// No record at or before `t`; the value is NaN.
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    pub start: DateTime<Utc>,
    pub step: TimeDelta,
    pub parameters: Vec<ParamId>,
    /// `[time x parameter]`; NaN where the cell is [`Cell::Missing`].
    pub values: Array2<f64>,
    pub cells: Array2<Cell>,
    /// Min/max over the non-missing cells of this series.
    pub stats: NormalizationStats,
}

impl FrameSeries {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn timestamp(&self, row: usize) -> DateTime<Utc> {
        self.start + self.step * row as i32
    }

    /// No raw record in `(t - step, t]`; true for missing cells as well.
    pub fn padded(&self, row: usize, col: usize) -> bool {
        self.cells[[row, col]] != Cell::Fresh
    }

    pub fn missing(&self, row: usize, col: usize) -> bool {
        self.cells[[row, col]] == Cell::Missing
    }

    /// True when every cell of the row has a value.
    pub fn row_complete(&self, row: usize) -> bool {
        self.cells.row(row).iter().all(|c| *c != Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    /// `max - min`, or 1 when the parameter is constant over the range.
    pub delta: f64,
    /// Set when `max == min` (or no data); `delta` was forced to 1.
    pub constant: bool,
    pub count: usize,
}

impl ParamStats {
    pub fn from_values(name: &str, values: impl IntoIterator<Item = f64>) -> Option<ParamStats> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut count = 0usize;
        for v in values {
            min = min.min(v);
            max = max.max(v);
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let constant = !(max > min);
        Some(ParamStats {
            parameter: name.to_string(),
            min,
            max,
            delta: if constant { 1.0 } else { max - min },
            constant,
            count,
        })
    }

    fn empty(name: &str) -> ParamStats {
        ParamStats {
            parameter: name.to_string(),
            min: 0.0,
            max: 0.0,
            delta: 1.0,
            constant: true,
            count: 0,
        }
    }
}

/// Per-parameter min-max normalization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub params: Vec<ParamStats>,
}

impl NormalizationStats {
    pub fn from_columns<I, C>(names: &[String], columns: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = f64>,
    {
        let params = names
            .iter()
            .zip(columns)
            .map(|(n, col)| ParamStats::from_values(n, col).unwrap_or_else(|| ParamStats::empty(n)))
            .collect();
        NormalizationStats { params }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.parameter.as_str())
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.delta).collect()
    }

    pub fn has_constant(&self) -> bool {
        self.params.iter().any(|p| p.constant)
    }

    pub fn normalize(&self, col: usize, x: f64) -> f64 {
        let p = &self.params[col];
        (x - p.min) / p.delta
    }

    pub fn denormalize(&self, col: usize, y: f64) -> f64 {
        let p = &self.params[col];
        y * p.delta + p.min
    }

    /// Normalizes a `[time x parameter]` matrix column-wise.
    pub fn normalize_matrix(&self, raw: &Array2<f64>) -> Array2<f64> {
        let mut out = raw.clone();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| self.normalize(c, x));
        }
        out
    }

    pub fn denormalize_matrix(&self, normalized: &Array2<f64>) -> Array2<f64> {
        let mut out = normalized.clone();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|y| self.denormalize(c, y));
        }
        out
    }

    /// Short content hash used to tag payloads computed with these stats.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update(p.parameter.as_bytes());
            h.update(p.min.to_le_bytes());
            h.update(p.delta.to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::seconds;
    use proptest::prelude::*;

    fn t(s: i64) -> DateTime<Utc> {
        from_millis(1_643_673_600_000 + s * 1000)
    }

    fn store() -> TimeSeriesStore {
        TimeSeriesStore::new(Catalog::builtin())
    }

    fn wind() -> ParamId {
        Catalog::builtin().id("WMET.WindSpeed").unwrap()
    }

    fn rec(s: i64, v: f64) -> TelemetryRecord {
        TelemetryRecord::new(t(s), wind(), v, Source::Live)
    }

    #[test]
    fn ingest_sorts_by_time() {
        let mut st = store();
        let r = st.ingest_batch(&[rec(2, 3.0), rec(0, 1.0), rec(1, 2.0)]);
        assert_eq!(r.accepted, 3);
        let q = st.query(t(0), t(5), &[wind()]).unwrap();
        let times: Vec<_> = q.iter().map(|r| r.timestamp).collect();
        assert_eq!(times, vec![t(0), t(1), t(2)]);
    }

    #[test]
    fn ingest_rejects_unphysical() {
        let mut st = store();
        let r = st.ingest_batch(&[rec(0, -3.0)]);
        assert_eq!(r.rejected_unphysical, 1);
        assert_eq!(r.accepted, 0);
        assert!(st.is_empty());
    }

    #[test]
    fn ingest_counts_unknown_parameters() {
        let mut st = store();
        let bogus = TelemetryRecord::new(t(0), ParamId(999), 1.0, Source::Live);
        let r = st.ingest_batch(&[bogus, rec(0, 1.0)]);
        assert_eq!(r.unknown_parameter, 1);
        assert_eq!(r.accepted, 1);
    }

    #[test]
    fn duplicates_collapse() {
        let mut st = store();
        let r = st.ingest_batch(&[rec(0, 5.0), rec(0, 5.0)]);
        assert_eq!((r.accepted, r.deduplicated), (1, 1));
        let r = st.ingest_batch(&[rec(0, 5.0)]);
        assert_eq!((r.accepted, r.deduplicated), (0, 1));
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn conflicting_values_keep_last_arrival() {
        let mut st = store();
        let r = st.ingest_batch(&[rec(0, 5.0), rec(0, 6.0)]);
        assert_eq!((r.accepted, r.deduplicated), (1, 1));
        assert_eq!(st.query(t(0), t(0), &[wind()]).unwrap()[0].value, 6.0);
        st.ingest_batch(&[rec(1, 1.0), rec(0, 7.0)]);
        let q = st.query(t(0), t(1), &[wind()]).unwrap();
        assert_eq!(q.iter().map(|r| r.value).collect::<Vec<_>>(), vec![7.0, 1.0]);
    }

    #[test]
    fn query_examples() {
        let st = store();
        assert!(st.query(t(0), t(100), &[wind()]).unwrap().is_empty());
        let mut st = store();
        st.ingest_batch(&[rec(0, 1.0), rec(1, 2.0), rec(2, 3.0), rec(3, 4.0)]);
        assert_eq!(st.query(t(1), t(1), &[wind()]).unwrap().len(), 1);
        assert_eq!(st.query(t(0), t(2), &[wind()]).unwrap().len(), 3);
        assert!(matches!(st.query(t(2), t(0), &[wind()]), Err(Error::InvalidRange { .. })));
        assert!(matches!(st.query(t(0), t(2), &[ParamId(500)]), Err(Error::UnknownParameter(_))));
    }

    #[test]
    fn resample_forward_fills() {
        let mut st = store();
        st.ingest_batch(&[rec(0, 5.0), rec(3, 7.0)]);
        let f = st.resample(t(0), t(4), &[wind()], seconds(1)).unwrap();
        assert_eq!(f.values.column(0).to_vec(), vec![5.0, 5.0, 5.0, 7.0, 7.0]);
        let padded: Vec<bool> = (0..5).map(|r| f.padded(r, 0)).collect();
        assert_eq!(padded, vec![false, true, true, false, true]);
        assert_eq!(f.start, t(0));
    }

    #[test]
    fn resample_marks_cells_before_first_record_missing() {
        let mut st = store();
        st.ingest_batch(&[rec(2, 5.0)]);
        let f = st.resample(t(0), t(3), &[wind()], seconds(1)).unwrap();
        assert!(f.missing(0, 0) && f.missing(1, 0));
        assert!(f.values[[0, 0]].is_nan());
        assert!(!f.padded(2, 0) && f.padded(3, 0));
        assert!(!f.row_complete(1) && f.row_complete(2));
    }

    #[test]
    fn resample_constant_parameter() {
        let mut st = store();
        st.ingest_batch(&[rec(0, 4.0), rec(2, 4.0), rec(4, 4.0)]);
        let f = st.resample(t(0), t(5), &[wind()], seconds(1)).unwrap();
        assert!(f.values.iter().all(|&v| v == 4.0));
        let padded: Vec<bool> = (0..6).map(|r| f.padded(r, 0)).collect();
        assert_eq!(padded, vec![false, true, false, true, false, true]);
        assert!(f.stats.params[0].constant);
    }

    #[test]
    fn resample_uses_latest_record_within_a_cell() {
        let mut st = store();
        let base = to_millis(t(0));
        st.ingest_batch(&[
            TelemetryRecord::new(from_millis(base + 200), wind(), 1.0, Source::Live),
            TelemetryRecord::new(from_millis(base + 700), wind(), 2.0, Source::Live),
        ]);
        let f = st.resample(t(0), t(2), &[wind()], seconds(1)).unwrap();
        assert!(f.missing(0, 0));
        assert_eq!(f.values[[1, 0]], 2.0);
        assert!(!f.padded(1, 0));
    }

    #[test]
    fn resample_aligns_to_epoch_grid() {
        let mut st = store();
        st.ingest_batch(&[rec(0, 1.0)]);
        let from = from_millis(to_millis(t(0)) + 300);
        let f = st.resample(from, t(3), &[wind()], seconds(1)).unwrap();
        assert_eq!(f.start, t(1));
        assert_eq!(f.len(), 3);
        let f = st.resample(t(0), t(120), &[wind()], seconds(60)).unwrap();
        assert_eq!(f.len(), 3);
        assert!(st.resample(t(0), t(1), &[wind()], TimeDelta::zero()).is_err());
    }

    #[test]
    fn resample_with_no_parameters_is_empty() {
        let st = store();
        let f = st.resample(t(0), t(3), &[], seconds(1)).unwrap();
        assert_eq!(f.values.dim(), (4, 0));
    }

    #[test]
    fn normalization_examples() {
        let mut st = store();
        st.ingest_batch(&[rec(0, 2.0), rec(1, 4.0), rec(2, 10.0)]);
        let s = st.normalization_stats(t(0), t(2), &[wind()]).unwrap();
        assert_eq!((s.params[0].min, s.params[0].max, s.params[0].delta), (2.0, 10.0, 8.0));
        assert!(!s.params[0].constant);
        let s = st.normalization_stats(t(0), t(0), &[wind()]).unwrap();
        assert_eq!(s.params[0].delta, 1.0);
        assert!(s.params[0].constant);
        assert!(matches!(
            st.normalization_stats(t(5), t(9), &[wind()]),
            Err(Error::EmptyRange(_))
        ));
    }

    #[test]
    fn normalize_denormalize_inverse() {
        let s = NormalizationStats::from_columns(&["a".to_string()], [vec![2.0, 10.0]]);
        assert_eq!(s.normalize(0, 6.0), 0.5);
        assert_eq!(s.denormalize(0, 0.5), 6.0);
        assert_eq!(s.fingerprint().len(), 16);
    }

    #[test]
    fn window_examples() {
        let mut st = store();
        st.ingest_batch(&(0..40).map(|s| rec(s, s as f64 * 0.5)).collect::<Vec<_>>());
        let w = st.window(t(39), 30, &[wind()], seconds(1)).unwrap();
        assert_eq!(w.nrows(), 30);
        assert_eq!(w[[0, 0]], 5.0);
        assert_eq!(w[[29, 0]], 19.5);
        let one = st.window(t(12), 1, &[wind()], seconds(1)).unwrap();
        let f = st.resample(t(12), t(12), &[wind()], seconds(1)).unwrap();
        assert_eq!(one, f.values);
        assert!(matches!(
            st.window(t(-5), 3, &[wind()], seconds(1)),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(matches!(
            st.window(t(10), 30, &[wind()], seconds(1)),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn save_and_load_round_trip() {
        let mut st = store();
        st.ingest_batch(&[rec(3, 0.1 + 0.2), rec(1, 1.0 / 3.0)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.txt");
        assert_eq!(st.save(&path).unwrap(), 2);
        let (back, report) = TimeSeriesStore::load(Catalog::builtin(), &path).unwrap();
        assert_eq!(report.accepted, 2);
        let a = st.query(t(0), t(5), &[wind()]).unwrap();
        let b = back.query(t(0), t(5), &[wind()]).unwrap();
        assert_eq!(
            a.iter().map(|r| (r.timestamp, r.value.to_bits())).collect::<Vec<_>>(),
            b.iter().map(|r| (r.timestamp, r.value.to_bits())).collect::<Vec<_>>()
        );
    }

    fn arb_records() -> impl Strategy<Value = Vec<(i64, u16, f64)>> {
        prop::collection::vec((0i64..60, 0u16..3, 0.0f64..50.0), 0..80)
    }

    fn to_records(raw: &[(i64, u16, f64)]) -> Vec<TelemetryRecord> {
        raw.iter()
            .map(|&(s, p, v)| TelemetryRecord::new(t(s), ParamId(p), v, Source::Live))
            .collect()
    }

    proptest! {
        #[test]
        fn ingest_is_idempotent(raw in arb_records()) {
            let recs = to_records(&raw);
            let mut once = store();
            once.ingest_batch(&recs);
            let mut twice = once.clone();
            twice.ingest_batch(&recs);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn report_accounts_for_every_record(raw in arb_records()) {
            let recs = to_records(&raw);
            let mut st = store();
            let r = st.ingest_batch(&recs);
            prop_assert_eq!(r.total(), recs.len());
            prop_assert_eq!(st.len(), r.accepted);
        }

        #[test]
        fn query_is_sorted_for_any_permutation(raw in arb_records(), split in 0usize..80) {
            let recs = to_records(&raw);
            let split = split.min(recs.len());
            let mut st = store();
            st.ingest_batch(&recs[split..]);
            st.ingest_batch(&recs[..split]);
            let ids = [ParamId(0), ParamId(1), ParamId(2)];
            let q = st.query(t(0), t(60), &ids).unwrap();
            prop_assert!(q.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        }

        #[test]
        fn query_round_trips_through_a_fresh_store(raw in arb_records(), a in 0i64..60, len in 0i64..60) {
            let mut st = store();
            st.ingest_batch(&to_records(&raw));
            let ids = [ParamId(0), ParamId(1), ParamId(2)];
            let q = st.query(t(a), t(a + len), &ids).unwrap();
            let mut fresh = store();
            fresh.ingest_batch(&q);
            prop_assert_eq!(fresh.query(t(a), t(a + len), &ids).unwrap(), q);
        }

        #[test]
        fn resample_is_causal(raw in arb_records(), cut in 0i64..60, future in arb_records()) {
            let mut st = store();
            st.ingest_batch(&to_records(&raw));
            let ids = [ParamId(0), ParamId(1), ParamId(2)];
            let before = st.resample(t(0), t(cut), &ids, seconds(1)).unwrap();
            let shifted: Vec<_> = future.iter().map(|&(s, p, v)| (cut + 1 + s, p, v)).collect();
            st.ingest_batch(&to_records(&shifted));
            let after = st.resample(t(0), t(cut), &ids, seconds(1)).unwrap();
            prop_assert_eq!(before.cells, after.cells);
            prop_assert_eq!(
                before.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                after.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }

        #[test]
        fn fresh_cells_come_from_a_record_in_the_cell(raw in arb_records()) {
            let mut st = store();
            st.ingest_batch(&to_records(&raw));
            let ids = [ParamId(0), ParamId(1), ParamId(2)];
            let f = st.resample(t(0), t(60), &ids, seconds(1)).unwrap();
            for r in 0..f.len() {
                let g = f.timestamp(r);
                for (c, &p) in ids.iter().enumerate() {
                    let in_cell = st.query(g - seconds(1) + TimeDelta::milliseconds(1), g, &[p]).unwrap();
                    prop_assert_eq!(!f.padded(r, c), !in_cell.is_empty());
                    if !f.padded(r, c) {
                        prop_assert!(in_cell.iter().any(|rec| rec.value == f.values[[r, c]]));
                    }
                }
            }
        }
    }
}
