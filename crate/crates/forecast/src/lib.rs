//! Multi-step forecasting for the digital twin: persistence, DNN and LSTM
//! forecasters trained on normalized telemetry windows, optional
//! pre-training on persistence, and relative-NRMSE benchmarking.

pub mod benchmark;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod network;
pub mod prepare;
pub mod pretrain;
pub mod stack;
pub mod task;
pub mod train;

pub use benchmark::{benchmark, render_csv, render_table, BenchmarkRow};
pub use dataset::{prediction_instants, sample_count, Dataset, Split};
pub use error::{ForecastError, Result};
pub use metrics::{nmse, nrmse_dataset, nrmse_over, nrmse_single, persistence_forecast, Forecaster, Persistence};
pub use model::{EpochRecord, ForecastModel, ModelKind, PretrainSummary, Provenance, TrainingHistory};
pub use network::{Topology, Trace};
pub use prepare::{prepare, prepare_split, Prepared};
pub use pretrain::{pretrain_persistence, PretrainConfig, PretrainOutcome};
pub use stack::stack_forecasts;
pub use task::{ForecastTask, Timescale, WindowShape};
pub use train::{finetune, train, Adam, TrainConfig};
