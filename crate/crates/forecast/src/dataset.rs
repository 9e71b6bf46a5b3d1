//! Sliding-window samples over a normalized `[n x l]` series.
//!
//! Prediction instant `j` uses rows `j-m+1 ..= j` as input and rows
//! `j+1 ..= j+k` as target, for `j = m .. n-k-1`, which gives `n - m - k`
//! instants. An instant qualifies only if every row it touches is complete.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};
use twin_core::{FrameSeries, NormalizationStats};

use crate::error::{shape_err, ForecastError, Result};
use crate::task::WindowShape;

/// Prediction instants for a series of `n` rows; empty when `n <= m + k`.
pub fn prediction_instants(n: usize, m: usize, k: usize) -> Range<usize> {
    m..n.saturating_sub(k).max(m)
}

pub fn sample_count(n: usize, m: usize, k: usize) -> usize {
    prediction_instants(n, m, k).len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
    complete: Vec<bool>,
    shape: WindowShape,
    deltas: Vec<f64>,
}

/// Instants of a chronological train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Dataset {
    /// Rows containing NaN are treated as incomplete.
    pub fn new(values: Array2<f64>, m: usize, k: usize) -> Result<Self> {
        let shape = WindowShape::new(m, k, values.ncols())?;
        let complete = values.rows().into_iter().map(|r| r.iter().all(|v| !v.is_nan())).collect();
        let deltas = vec![1.0; shape.l];
        Ok(Dataset { values, complete, shape, deltas })
    }

    /// Normalizes resampled frames; cells that were never observed disqualify their row.
    pub fn from_frames(frames: &FrameSeries, norm: &NormalizationStats, m: usize, k: usize) -> Result<Self> {
        if norm.len() != frames.parameters.len() {
            return Err(shape_err(format!("{} parameters", frames.parameters.len()), format!("{} stats", norm.len())));
        }
        let mut values = norm.normalize_matrix(&frames.values);
        let complete: Vec<bool> = (0..frames.len()).map(|r| frames.row_complete(r)).collect();
        for (r, ok) in complete.iter().enumerate() {
            if !ok {
                values.row_mut(r).fill(f64::NAN);
            }
        }
        Dataset::new(values, m, k)
    }

    /// Per-parameter normalizer used by the metrics; all ones for normalized data.
    pub fn with_deltas(mut self, deltas: Vec<f64>) -> Result<Self> {
        if deltas.len() != self.shape.l {
            return Err(shape_err(self.shape.l, deltas.len()));
        }
        if let Some(&d) = deltas.iter().find(|d| !(**d > 0.0)) {
            return Err(ForecastError::DegenerateDelta(d));
        }
        self.deltas = deltas;
        Ok(self)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// `n - m - k`, the number of prediction instants before completeness filtering.
    pub fn n_samples(&self) -> usize {
        sample_count(self.n(), self.shape.m, self.shape.k)
    }

    pub fn is_usable(&self, j: usize) -> bool {
        let WindowShape { m, k, .. } = self.shape;
        j >= m && j + k < self.n() && self.complete[j + 1 - m..=j + k].iter().all(|&c| c)
    }

    /// Qualifying prediction instants in chronological order.
    pub fn instants(&self) -> Vec<usize> {
        let WindowShape { m, k, .. } = self.shape;
        let n = self.n();
        if n <= m + k {
            return Vec::new();
        }
        // Running count of incomplete rows so each check is O(1).
        let mut bad = vec![0usize; n + 1];
        for (i, &c) in self.complete.iter().enumerate() {
            bad[i + 1] = bad[i] + usize::from(!c);
        }
        prediction_instants(n, m, k)
            .filter(|&j| bad[j + k + 1] == bad[j + 1 - m])
            .collect()
    }

    pub fn input(&self, j: usize) -> ArrayView2<'_, f64> {
        self.values.slice(s![j + 1 - self.shape.m..=j, ..])
    }

    pub fn target(&self, j: usize) -> ArrayView2<'_, f64> {
        self.values.slice(s![j + 1..=j + self.shape.k, ..])
    }

    /// Flattened inputs `[B x m*l]` and targets `[B x k*l]` for a batch of instants.
    pub fn gather(&self, instants: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let mut x = Array2::zeros((instants.len(), self.shape.input_width()));
        let mut y = Array2::zeros((instants.len(), self.shape.output_width()));
        self.gather_into(instants, x.view_mut(), y.view_mut());
        (x, y)
    }

    pub fn gather_into(&self, instants: &[usize], mut x: ArrayViewMut2<f64>, mut y: ArrayViewMut2<f64>) {
        let WindowShape { m, k, l } = self.shape;
        let flat = self.values.as_slice().expect("standard layout");
        for (b, &j) in instants.iter().enumerate() {
            let start = (j + 1 - m) * l;
            x.row_mut(b).iter_mut().zip(&flat[start..start + m * l]).for_each(|(d, s)| *d = *s);
            let start = (j + 1) * l;
            y.row_mut(b).iter_mut().zip(&flat[start..start + k * l]).for_each(|(d, s)| *d = *s);
        }
    }

    /// Holds out the last `fraction` of qualifying instants. Training instants
    /// whose targets would reach into the first validation input are dropped.
    pub fn split(&self, fraction: f64) -> Result<Split> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(ForecastError::InvalidConfig(format!("validation fraction {fraction} outside (0, 1)")));
        }
        let all = self.instants();
        if all.len() < 2 {
            return Err(ForecastError::InsufficientData { needed: 2, available: all.len() });
        }
        let n_val = ((all.len() as f64 * fraction).ceil() as usize).clamp(1, all.len() - 1);
        let validation = all[all.len() - n_val..].to_vec();
        let first_input = validation[0] + 1 - self.shape.m;
        let train = all[..all.len() - n_val]
            .iter()
            .copied()
            .filter(|&j| j + self.shape.k < first_input)
            .collect();
        Ok(Split { train, validation })
    }

    /// Rows `range` as a new dataset with the same shape and deltas.
    pub fn slice_rows(&self, range: Range<usize>) -> Dataset {
        Dataset {
            values: self.values.slice(s![range.clone(), ..]).to_owned(),
            complete: self.complete[range].to_vec(),
            shape: self.shape,
            deltas: self.deltas.clone(),
        }
    }
}
