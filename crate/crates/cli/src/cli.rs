use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use twin_forecast::{ModelKind, Timescale};

#[derive(Debug, Parser)]
#[command(name = "twin", version, about = "Wind-turbine digital twin: simulate, train, benchmark and serve")]
pub struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for simulation, weight initialization and batch order.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic telemetry as a record file.
    Simulate(SimulateArgs),
    /// Load record files into a store file or a running server.
    Ingest(IngestArgs),
    /// Train a forecasting model on a record file.
    Train(TrainArgs),
    /// Compare models against persistence on held-out data.
    Benchmark(BenchmarkArgs),
    /// Run the HTTP server.
    Serve(ServeArgs),
    /// Run the HTTP server, replaying a record file as live data.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulated seconds.
    #[arg(long)]
    pub duration: u64,
    /// Step between emitted instants, in seconds.
    #[arg(long, default_value_t = 1)]
    pub dt: u32,
    /// Scenario file overriding simulator defaults.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output record file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only emit these parameters (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Record files to load.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Store file to merge into (created if missing).
    #[arg(long, conflicts_with = "server")]
    pub store: Option<PathBuf>,
    /// Base URL of a running server, e.g. http://127.0.0.1:8080.
    #[arg(long, requires = "token")]
    pub server: Option<String>,
    #[arg(long)]
    pub token: Option<String>,
    /// Records per request when posting to a server.
    #[arg(long, default_value_t = 5000)]
    pub batch: usize,
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    #[arg(long, default_value = "seconds")]
    pub timescale: Timescale,
    /// Input window length in steps.
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    /// Forecast horizon in steps.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Forecast parameters (comma-separated); the catalog's forecast set when absent.
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "lstm")]
    pub kind: ModelKind,
    #[command(flatten)]
    pub task: TaskArgs,
    /// Layer widths: hidden layers for a DNN, `hidden,dense` for an LSTM.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Fraction of the data span used for training; the rest is left for benchmarking.
    #[arg(long, default_value_t = 1.0)]
    pub split: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub patience: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    pub validation: f64,
    #[arg(long)]
    pub max_samples_per_epoch: Option<usize>,
    /// Pre-train on persistence emulation before fitting the data.
    #[arg(long)]
    pub pretrain: bool,
    #[arg(long, default_value_t = 200_000)]
    pub pretrain_samples: u64,
    #[arg(long, default_value_t = 0.01)]
    pub pretrain_threshold: f64,
    #[arg(long, default_value_t = 3e-3)]
    pub pretrain_learning_rate: f64,
    #[arg(long, default_value_t = 3e-5)]
    pub pretrain_final_learning_rate: f64,
    #[arg(long, default_value_t = 20_000)]
    pub pretrain_eval_every: u64,
    /// Write the training history as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model files, or `persistence` for the baseline alone.
    #[arg(long = "model", required = true, num_args = 1..)]
    pub models: Vec<String>,
    /// Test on the span after this fraction of the data; 0 tests on all of it.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Task for a persistence-only benchmark.
    #[command(flatten)]
    pub task: TaskArgs,
    /// Also write the rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Bearer token required for ingestion.
    #[arg(long, default_value = "")]
    pub token: String,
    /// Store file loaded at start and written on shutdown.
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Model files as `id=path` or `path` (id is the file stem).
    #[arg(long = "model")]
    pub models: Vec<String>,
    /// Wind forecast endpoint (http, https or file URL).
    #[arg(long)]
    pub weather: Option<String>,
    /// Default wind field box: lon_min,lat_min,lon_max,lat_max.
    #[arg(long)]
    pub bbox: Option<String>,
    #[arg(long, default_value_t = 4096)]
    pub stream_capacity: usize,
    /// Ticker period in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub tick_ms: u64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Recorded telemetry to replay.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[command(flatten)]
    pub serve: ServeArgs,
}
