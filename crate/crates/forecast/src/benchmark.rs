//! Model NRMSE relative to persistence on a common test set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{shape_err, ForecastError, Result};
use crate::metrics::{nrmse_dataset, Persistence};
use crate::model::{ForecastModel, ModelKind};
use crate::task::Timescale;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub timescale: Timescale,
    pub nrmse: f64,
    pub relative: f64,
}

/// One row per model, preceded by a persistence row unless one of the models
/// is persistence. A persistence row's relative value is exactly 1.
///
/// When persistence itself scores 0, a model scoring 0 is reported as 1 and
/// any other model as infinity.
pub fn benchmark(models: &[&ForecastModel], test: &Dataset) -> Result<Vec<BenchmarkRow>> {
    let Some(first) = models.first() else {
        return Err(ForecastError::InvalidConfig("no models to benchmark".into()));
    };
    for m in &models[1..] {
        if m.task != first.task {
            return Err(ForecastError::TaskMismatch {
                left: first.task.to_string(),
                right: m.task.to_string(),
            });
        }
    }
    if test.shape() != first.shape() {
        return Err(shape_err(first.shape(), test.shape()));
    }
    let timescale = first.task.timescale;
    let baseline = nrmse_dataset(&Persistence, test)?;
    let mut rows = Vec::with_capacity(models.len() + 1);
    if models.iter().all(|m| m.kind != ModelKind::Persistence) {
        rows.push(BenchmarkRow { model: "persistence".into(), timescale, nrmse: baseline, relative: 1.0 });
    }
    for m in models {
        let (nrmse, relative) = if m.kind == ModelKind::Persistence {
            (baseline, 1.0)
        } else {
            let e = nrmse_dataset(*m, test)?;
            (e, relative_to(e, baseline))
        };
        rows.push(BenchmarkRow { model: m.label(), timescale, nrmse, relative });
    }
    Ok(rows)
}

fn relative_to(nrmse: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        nrmse / baseline
    } else if nrmse == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Aligned plain-text table.
pub fn render_table(rows: &[BenchmarkRow]) -> String {
    let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:<9}  {:>12}  {:>9}\n", "model", "timescale", "nrmse", "relative");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:<9}  {:>12.6}  {:>9.4}",
            r.model,
            r.timescale.to_string(),
            r.nrmse,
            r.relative
        );
    }
    out
}

/// `model,timescale,nrmse,relative` lines with full precision.
pub fn render_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("model,timescale,nrmse,relative\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.model, r.timescale, r.nrmse, r.relative);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Topology;
    use crate::task::ForecastTask;
    use ndarray::Array;

    fn task(ts: Timescale) -> ForecastTask {
        ForecastTask::new(ts, 4, 2, vec!["WMET.WindSpeed".into()]).unwrap()
    }

    fn data() -> Dataset {
        Dataset::new(Array::from_shape_fn((60, 1), |(i, _)| (i as f64 * 0.3).sin()), 4, 2).unwrap()
    }

    #[test]
    fn persistence_alone_is_one() {
        let p = ForecastModel::persistence(task(Timescale::Seconds));
        let rows = benchmark(&[&p], &data()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].relative, 1.0);
    }

    #[test]
    fn networks_are_scored_against_persistence() {
        let t = task(Timescale::Minutes);
        let dnn = ForecastModel::network(t.clone(), Topology::dnn(t.shape(), &[4]), 0).unwrap();
        let rows = benchmark(&[&dnn], &data()).unwrap();
        assert_eq!(rows[0].model, "persistence");
        assert_eq!(rows[0].relative, 1.0);
        assert_eq!(rows[1].model, "dnn");
        assert!((rows[1].relative - rows[1].nrmse / rows[0].nrmse).abs() < 1e-15);
        let csv = render_csv(&rows);
        assert!(csv.starts_with("model,timescale,nrmse,relative\npersistence,minutes,"));
        assert!(render_table(&rows).lines().count() == 3);
    }

    #[test]
    fn mismatched_tasks_name_both() {
        let a = ForecastModel::persistence(task(Timescale::Seconds));
        let b = ForecastModel::persistence(task(Timescale::Hours));
        let err = benchmark(&[&a, &b], &data()).unwrap_err().to_string();
        assert!(err.contains("seconds") && err.contains("hours"), "{err}");
    }

    #[test]
    fn zero_baseline() {
        assert_eq!(relative_to(0.0, 0.0), 1.0);
        assert_eq!(relative_to(0.1, 0.0), f64::INFINITY);
    }
}
