//! Mini-batch training with a chronological hold-out and early stopping.

use log::{debug, info};
use ndarray::{s, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{shape_err, ForecastError, Result};
use crate::metrics::{loss_and_output_grad, nrmse_over, Forecaster};
use crate::model::{EpochRecord, ForecastModel, Provenance};
use crate::network::Topology;
use crate::task::WindowShape;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let lr = self.learning_rate * c2.sqrt() / c1;
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * *m / (v.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Cap on training samples drawn per epoch.
    pub max_samples_per_epoch: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            validation_fraction: 0.1,
            max_epochs: 20,
            patience: 1,
            learning_rate: 1e-3,
            seed: 0,
            max_samples_per_epoch: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ForecastError::InvalidConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

/// A topology with borrowed weights, usable wherever a [`Forecaster`] is.
pub struct Net<'a> {
    pub topology: &'a Topology,
    pub weights: &'a [f64],
}

impl Forecaster for Net<'_> {
    fn predict_batch(&self, _shape: WindowShape, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.topology.forward(self.weights, inputs)
    }
}

/// Mean NMSE of one batch and its gradient, accumulated into `grad`.
pub fn batch_gradient(
    topology: &Topology,
    weights: &[f64],
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    deltas: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    let (pred, trace) = topology.forward_traced(weights, x)?;
    if pred.dim() != y.dim() {
        return Err(shape_err(format!("{:?}", pred.dim()), format!("{:?}", y.dim())));
    }
    let mut d_pred = Array2::zeros(pred.dim());
    let loss = loss_and_output_grad(pred.view(), y, deltas, d_pred.view_mut());
    topology.backward(weights, &trace, d_pred.view(), grad)?;
    Ok(loss)
}

/// Trains from the model's current weights and returns the best-validation snapshot.
pub fn train(model: &ForecastModel, data: &Dataset, config: &TrainConfig) -> Result<ForecastModel> {
    config.validate()?;
    let Some(topology) = model.topology.as_ref() else {
        return Err(ForecastError::NotTrainable("persistence"));
    };
    if data.shape() != model.shape() {
        return Err(shape_err(model.shape(), data.shape()));
    }
    let split = data.split(config.validation_fraction)?;
    if split.train.len() < config.batch_size {
        return Err(ForecastError::InsufficientData {
            needed: config.batch_size,
            available: split.train.len(),
        });
    }
    let deltas = data.deltas();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = model.weights.clone();
    let mut adam = Adam::new(weights.len(), config.learning_rate);
    let mut grad = vec![0.0; weights.len()];

    let net = Net { topology, weights: &weights };
    let initial_loss = nrmse_over(&net, data, &split.train)?.powi(2);
    let initial_val = nrmse_over(&net, data, &split.validation)?;
    let mut history = model.history.clone();
    history.epochs = vec![EpochRecord { epoch: 0, train_loss: initial_loss, validation_nrmse: initial_val }];
    history.best_epoch = Some(0);
    info!("epoch 0: train loss {initial_loss:.6}, validation NRMSE {initial_val:.6}");

    let mut best = (initial_val, weights.clone());
    let mut stale = 0;
    let mut order = split.train.clone();
    let per_epoch = config.max_samples_per_epoch.unwrap_or(order.len()).min(order.len());
    let shape = data.shape();
    let mut x = Array2::zeros((config.batch_size, shape.input_width()));
    let mut y = Array2::zeros((config.batch_size, shape.output_width()));

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order[..per_epoch].chunks(config.batch_size) {
            let b = chunk.len();
            data.gather_into(chunk, x.slice_mut(s![..b, ..]), y.slice_mut(s![..b, ..]));
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = batch_gradient(topology, &weights, x.slice(s![..b, ..]), y.slice(s![..b, ..]), deltas, &mut grad)?;
            if !loss.is_finite() {
                return Err(ForecastError::NonFiniteLoss { epoch });
            }
            adam.step(&mut weights, &grad);
            loss_sum += loss;
            batches += 1;
            history.samples_seen += b as u64;
        }
        let train_loss = loss_sum / batches as f64;
        let val = nrmse_over(&Net { topology, weights: &weights }, data, &split.validation)?;
        if !val.is_finite() {
            return Err(ForecastError::NonFiniteLoss { epoch });
        }
        info!("epoch {epoch}: train loss {train_loss:.6}, validation NRMSE {val:.6}");
        history.epochs.push(EpochRecord { epoch, train_loss, validation_nrmse: val });
        if val < best.0 {
            best = (val, weights.clone());
            history.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                debug!("no validation improvement for {stale} epochs, stopping");
                break;
            }
        }
    }
    Ok(ForecastModel {
        weights: best.1,
        history,
        ..model.clone()
    })
}

/// [`train`] starting from persistence-pretrained weights.
pub fn finetune(pretrained: &ForecastModel, data: &Dataset, config: &TrainConfig) -> Result<ForecastModel> {
    if pretrained.provenance != Provenance::PersistencePretrained {
        return Err(ForecastError::NotPretrained);
    }
    train(pretrained, data, config)
}
