use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use crate::error::{shape_err, ForecastError, Result};
use crate::metrics::Forecaster;
use crate::task::WindowShape;

/// Extends a forecast past `k` steps by feeding each predicted block back as
/// input. Returns `[horizons*k x l]`.
pub fn stack_forecasts(
    model: &dyn Forecaster,
    shape: WindowShape,
    window: ArrayView2<f64>,
    horizons: usize,
) -> Result<Array2<f64>> {
    if horizons == 0 {
        return Err(ForecastError::InvalidConfig("horizons must be at least 1".into()));
    }
    let WindowShape { m, k, l } = shape;
    if window.dim() != (m, l) {
        return Err(shape_err(format!("({m}, {l})"), format!("{:?}", window.dim())));
    }
    let mut current = window.to_owned();
    let mut blocks = Vec::with_capacity(horizons);
    for _ in 0..horizons {
        let flat = Array2::from_shape_vec((1, m * l), current.iter().copied().collect()).expect("sized");
        let block = model
            .predict_batch(shape, flat.view())?
            .into_shape_with_order((k, l))
            .map_err(|e| shape_err(format!("({k}, {l})"), e))?;
        let joined = concatenate(Axis(0), &[current.view(), block.view()]).expect("same width");
        current = joined.slice(s![joined.nrows() - m.., ..]).to_owned();
        blocks.push(block);
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    Ok(concatenate(Axis(0), &views).expect("same width"))
}
