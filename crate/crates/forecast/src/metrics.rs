//! Normalized error metrics and the persistence baseline.

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

use crate::dataset::Dataset;
use crate::error::{shape_err, ForecastError, Result};
use crate::task::WindowShape;

/// Squared error normalized by the parameter's range.
pub fn nmse(truth: f64, pred: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(ForecastError::DegenerateDelta(delta));
    }
    let e = (truth - pred) / delta;
    Ok(e * e)
}

/// Root of the mean NMSE over the `k x l` cells of one forecast.
pub fn nrmse_single(truth: ArrayView2<f64>, pred: ArrayView2<f64>, deltas: &[f64]) -> Result<f64> {
    if truth.dim() != pred.dim() {
        return Err(shape_err(format!("{:?}", truth.dim()), format!("{:?}", pred.dim())));
    }
    if truth.ncols() != deltas.len() {
        return Err(shape_err(format!("{} deltas", truth.ncols()), deltas.len()));
    }
    let mut sum = 0.0;
    for (t_row, p_row) in truth.rows().into_iter().zip(pred.rows()) {
        for ((&t, &p), &d) in t_row.iter().zip(p_row.iter()).zip(deltas) {
            sum += nmse(t, p, d)?;
        }
    }
    Ok((sum / truth.len() as f64).sqrt())
}

/// Anything that maps flattened windows `[B x m*l]` to forecasts `[B x k*l]`.
pub trait Forecaster {
    fn predict_batch(&self, shape: WindowShape, inputs: ArrayView2<f64>) -> Result<Array2<f64>>;
}

/// Repeats the last observed row for every future step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn predict_batch(&self, shape: WindowShape, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if inputs.ncols() != shape.input_width() {
            return Err(shape_err(shape.input_width(), inputs.ncols()));
        }
        let WindowShape { m, k, l } = shape;
        let mut out = Array2::zeros((inputs.nrows(), k * l));
        for (src, mut dst) in inputs.rows().into_iter().zip(out.rows_mut()) {
            let last = src.slice(s![(m - 1) * l..]);
            for step in 0..k {
                dst.slice_mut(s![step * l..(step + 1) * l]).assign(&last);
            }
        }
        Ok(out)
    }
}

/// `[m x l]` window to `[k x l]` forecast, every row equal to the window's last row.
pub fn persistence_forecast(window: ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    let last = window
        .rows()
        .into_iter()
        .next_back()
        .ok_or_else(|| shape_err("non-empty window", "0 rows"))?;
    let mut out = Array2::zeros((k, window.ncols()));
    out.rows_mut().into_iter().for_each(|mut r| r.assign(&last));
    Ok(out)
}

const EVAL_BATCH: usize = 512;

/// Sum of per-instant squared NRMSE over `instants`.
fn sum_squared(model: &dyn Forecaster, data: &Dataset, instants: &[usize]) -> Result<f64> {
    let shape = data.shape();
    let deltas = data.deltas();
    let cells = shape.output_width() as f64;
    let mut total = 0.0;
    for chunk in instants.chunks(EVAL_BATCH) {
        let (x, y) = data.gather(chunk);
        let pred = model.predict_batch(shape, x.view())?;
        if pred.dim() != y.dim() {
            return Err(shape_err(format!("{:?}", y.dim()), format!("{:?}", pred.dim())));
        }
        for (t_row, p_row) in y.rows().into_iter().zip(pred.rows()) {
            let mut s = 0.0;
            for (c, (&t, &p)) in t_row.iter().zip(p_row.iter()).enumerate() {
                let e = (t - p) / deltas[c % shape.l];
                s += e * e;
            }
            total += s / cells;
        }
    }
    Ok(total)
}

/// Dataset NRMSE: root of the mean squared single-forecast NRMSE over `instants`.
pub fn nrmse_over(model: &dyn Forecaster, data: &Dataset, instants: &[usize]) -> Result<f64> {
    if instants.is_empty() {
        return Err(ForecastError::EmptyDataset);
    }
    Ok((sum_squared(model, data, instants)? / instants.len() as f64).sqrt())
}

/// Dataset NRMSE over every qualifying prediction instant.
pub fn nrmse_dataset(model: &dyn Forecaster, data: &Dataset) -> Result<f64> {
    nrmse_over(model, data, &data.instants())
}

/// Mean NMSE of a batch (the training loss) and its gradient with respect to
/// the predictions, written into `d_pred`.
pub fn loss_and_output_grad(
    pred: ArrayView2<f64>,
    target: ArrayView2<f64>,
    deltas: &[f64],
    mut d_pred: ArrayViewMut2<f64>,
) -> f64 {
    let l = deltas.len();
    let cells = pred.ncols() as f64;
    let scale = 1.0 / (cells * pred.nrows() as f64);
    let mut loss = 0.0;
    for ((p_row, t_row), mut g_row) in pred.rows().into_iter().zip(target.rows()).zip(d_pred.rows_mut()) {
        for (c, ((&p, &t), g)) in p_row.iter().zip(t_row.iter()).zip(g_row.iter_mut()).enumerate() {
            let d = deltas[c % l];
            let e = (p - t) / d;
            loss += e * e;
            *g = 2.0 * e / d * scale;
        }
    }
    loss * scale
}
