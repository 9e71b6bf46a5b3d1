//! Pre-training a network to imitate persistence on uniform random windows.

use std::f64::consts::PI;

use log::info;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, ForecastError, Result};
use crate::metrics::{Forecaster, Persistence};
use crate::model::{ForecastModel, PretrainSummary, Provenance};
use crate::network::Topology;
use crate::task::{ForecastTask, WindowShape};
use crate::train::{batch_gradient, Adam, Net};

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// When set, the rate follows a cosine from `learning_rate` down to this
    /// value over the sample budget.
    pub final_learning_rate: Option<f64>,
    /// Samples between hold-out evaluations.
    pub eval_every: u64,
    pub holdout: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            batch_size: 32,
            learning_rate: 1e-3,
            final_learning_rate: None,
            eval_every: 10_000,
            holdout: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub model: ForecastModel,
    pub samples: u64,
    /// Hold-out NRMSE against persistence at the last evaluation.
    pub nrmse: f64,
    pub converged: bool,
}

impl PretrainOutcome {
    /// The model if the threshold was met, otherwise [`ForecastError::BudgetExhausted`].
    pub fn into_result(self) -> Result<ForecastModel> {
        if self.converged {
            Ok(self.model)
        } else {
            Err(ForecastError::BudgetExhausted { samples: self.samples, nrmse: self.nrmse })
        }
    }
}

/// `[B x m*l]` windows with i.i.d. uniform entries and their persistence targets.
pub fn synthetic_windows(rng: &mut impl Rng, shape: WindowShape, count: usize) -> (Array2<f64>, Array2<f64>) {
    let x = Array2::from_shape_simple_fn((count, shape.input_width()), || rng.random::<f64>());
    let y = Persistence.predict_batch(shape, x.view()).expect("shape built above");
    (x, y)
}

/// NRMSE of `model` against persistence targets `y`.
pub fn emulation_nrmse(model: &dyn Forecaster, shape: WindowShape, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    let pred = model.predict_batch(shape, x.view())?;
    let se: f64 = pred.iter().zip(y.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((se / y.len() as f64).sqrt())
}

/// Trains a fresh network until its hold-out NRMSE against persistence falls
/// below `threshold` or `n_synthetic` samples are consumed.
pub fn pretrain_persistence(
    task: ForecastTask,
    topology: Topology,
    n_synthetic: u64,
    threshold: f64,
    config: &PretrainConfig,
) -> Result<PretrainOutcome> {
    if n_synthetic == 0 || config.batch_size == 0 || config.holdout == 0 || config.eval_every == 0 {
        return Err(ForecastError::InvalidConfig("budget, batch, hold-out and evaluation interval must be positive".into()));
    }
    let shape = task.shape();
    if !topology.fits(shape) {
        return Err(shape_err(shape, format!("{topology:?}")));
    }
    let mut model = ForecastModel::network(task, topology.clone(), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut holdout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    holdout_rng.set_stream(1);
    let (hx, hy) = synthetic_windows(&mut holdout_rng, shape, config.holdout);

    let mut weights = std::mem::take(&mut model.weights);
    let mut adam = Adam::new(weights.len(), config.learning_rate);
    let mut grad = vec![0.0; weights.len()];
    let deltas = vec![1.0; shape.l];
    let mut samples = 0u64;
    let mut next_eval = 0u64;
    let mut nrmse;
    loop {
        if samples >= next_eval || samples >= n_synthetic {
            nrmse = emulation_nrmse(&Net { topology: &topology, weights: &weights }, shape, &hx, &hy)?;
            info!("pretrain: {samples} samples, hold-out NRMSE {nrmse:.5}");
            if !nrmse.is_finite() {
                return Err(ForecastError::NonFiniteLoss { epoch: 0 });
            }
            if nrmse < threshold || samples >= n_synthetic {
                break;
            }
            next_eval = samples + config.eval_every;
        }
        let b = (config.batch_size as u64).min(n_synthetic - samples) as usize;
        let (x, y) = synthetic_windows(&mut rng, shape, b);
        if let Some(final_lr) = config.final_learning_rate {
            let progress = samples as f64 / n_synthetic as f64;
            adam.learning_rate = final_lr + 0.5 * (config.learning_rate - final_lr) * (1.0 + (PI * progress).cos());
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        batch_gradient(&topology, &weights, x.view(), y.view(), &deltas, &mut grad)?;
        adam.step(&mut weights, &grad);
        samples += b as u64;
    }
    let converged = nrmse < threshold;
    model.weights = weights;
    model.provenance = Provenance::PersistencePretrained;
    model.history.pretrain = Some(PretrainSummary { samples, nrmse, threshold, converged });
    model.history.samples_seen = samples;
    Ok(PretrainOutcome { model, samples, nrmse, converged })
}
