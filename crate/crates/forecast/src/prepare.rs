//! From stored telemetry to normalized datasets.

use chrono::{DateTime, Utc};
use twin_core::{FrameSeries, NormalizationStats, TimeSeriesStore};

use crate::dataset::Dataset;
use crate::error::{ForecastError, Result};
use crate::task::ForecastTask;

/// A dataset together with the grid it was cut from.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub frames: FrameSeries,
    pub norm: NormalizationStats,
    pub dataset: Dataset,
}

impl Prepared {
    /// Grid row at or after `at`.
    pub fn row_at(&self, at: DateTime<Utc>) -> usize {
        let step = self.frames.step.num_milliseconds();
        let offset = (at - self.frames.start).num_milliseconds();
        (offset.max(0) as usize).div_ceil(step as usize).min(self.frames.len())
    }
}

/// Resamples `[from, to]` at the task's timescale and normalizes it with
/// `norm`, or with min-max stats of the raw records in the same range.
pub fn prepare(
    store: &TimeSeriesStore,
    task: &ForecastTask,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    norm: Option<&NormalizationStats>,
) -> Result<Prepared> {
    let ids = task.resolve(store.catalog())?;
    let frames = store.resample(from, to, &ids, task.timescale.step())?;
    let norm = match norm {
        Some(n) => n.clone(),
        None => store.normalization_stats(from, to, &ids)?,
    };
    if !norm.names().eq(task.parameters.iter().map(String::as_str)) {
        return Err(ForecastError::InvalidConfig("normalization stats do not match the task's parameters".into()));
    }
    let dataset = Dataset::from_frames(&frames, &norm, task.m, task.k)?;
    Ok(Prepared { frames, norm, dataset })
}

/// Store span split at `fraction` of its length: normalization comes from the
/// leading part only and is applied to both parts.
pub fn prepare_split(
    store: &TimeSeriesStore,
    task: &ForecastTask,
    fraction: f64,
) -> Result<(Dataset, Dataset, NormalizationStats)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ForecastError::InvalidConfig(format!("split fraction {fraction} outside (0, 1)")));
    }
    let (first, last) = store.time_span().ok_or(ForecastError::EmptyDataset)?;
    let cut = first + chrono::TimeDelta::milliseconds(((last - first).num_milliseconds() as f64 * fraction) as i64);
    let ids = task.resolve(store.catalog())?;
    let norm = store.normalization_stats(first, cut, &ids)?;
    let all = prepare(store, task, first, last, Some(&norm))?;
    let row = all.row_at(cut);
    let train = all.dataset.slice_rows(0..row);
    let test = all.dataset.slice_rows(row..all.frames.len());
    Ok((train, test, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::Timescale;
    use std::sync::Arc;
    use twin_core::{Catalog, SimConfig, Simulator};

    fn store(hours: u64) -> TimeSeriesStore {
        let catalog = Catalog::builtin();
        let mut sim = Simulator::new(SimConfig::default(), catalog.clone()).unwrap();
        let mut store = TimeSeriesStore::new(Arc::clone(&catalog));
        store.ingest_batch(&sim.run(hours * 3600, 1));
        store
    }

    #[test]
    fn minute_datasets_are_normalized_to_the_unit_range() {
        let store = store(2);
        let task = ForecastTask::standard(Timescale::Minutes, store.catalog());
        let (first, last) = store.time_span().unwrap();
        let p = prepare(&store, &task, first, last, None).unwrap();
        assert_eq!(p.frames.len(), 120);
        assert_eq!(p.dataset.shape().l, 17);
        let v = p.dataset.values();
        assert!(v.iter().all(|x| x.is_nan() || (-1e-12..=1.0 + 1e-12).contains(x)));
    }

    #[test]
    fn split_uses_leading_stats_only() {
        let store = store(2);
        let task = ForecastTask::standard(Timescale::Minutes, store.catalog());
        let (train, test, norm) = prepare_split(&store, &task, 0.5).unwrap();
        assert_eq!(train.n() + test.n(), 120);
        assert!((train.n() as i64 - 60).abs() <= 1);
        let (first, last) = store.time_span().unwrap();
        let ids = task.resolve(store.catalog()).unwrap();
        let full = store.normalization_stats(first, last, &ids).unwrap();
        assert_ne!(norm, full);
    }
}
