//! HTTP and event-stream server for the digital twin.
//!
//! Telemetry arrives on `POST /api/v1/ingest`, history is pulled from
//! `/api/v1/historic`, and live frames are pushed over `/api/v1/stream` as
//! system time passes each whole second. See `docs/api.md` for payloads.

pub mod api;
pub mod clock;
pub mod error;
pub mod payload;
pub mod state;
pub mod stream;
pub mod time;

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use log::{info, warn};
use twin_core::record::read_records;
use twin_core::{Catalog, TimeSeriesStore};
use twin_forecast::ForecastModel;
use twin_weather::{BBox, ForecastEndpoint, WeatherClient};

pub use api::router;
pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{ApiError, ServeError};
pub use state::{AppState, Replay, StateOptions};
pub use stream::{Frame, StreamEvent, Subscription};
pub use time::{TimeKeeper, TimeState, TimeUpdate};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub token: String,
    /// Record file loaded at start-up and written back on shutdown.
    pub store_path: Option<PathBuf>,
    /// Model files keyed by the id clients use to select them.
    pub models: BTreeMap<String, PathBuf>,
    pub weather: Option<ForecastEndpoint>,
    pub default_bbox: Option<BBox>,
    /// Record file to replay, and the speed to replay it at.
    pub replay: Option<(PathBuf, f64)>,
    pub stream_capacity: usize,
    pub tick: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            token: String::new(),
            store_path: None,
            models: BTreeMap::new(),
            weather: None,
            default_bbox: None,
            replay: None,
            stream_capacity: 4096,
            tick: Duration::from_millis(100),
        }
    }
}

fn load_err(path: &std::path::Path, e: impl std::fmt::Display) -> ServeError {
    ServeError::Load { path: path.display().to_string(), message: e.to_string() }
}

/// Builds the shared state described by `config` on the given clock.
pub fn build_state(config: &ServerConfig, catalog: Arc<Catalog>, clock: Arc<dyn Clock>) -> Result<AppState, ServeError> {
    let store = match &config.store_path {
        Some(path) if path.exists() => {
            let (store, report) = TimeSeriesStore::load(catalog.clone(), path).map_err(|e| load_err(path, e))?;
            info!("loaded {} records from {}: {report:?}", store.len(), path.display());
            store
        }
        _ => TimeSeriesStore::new(catalog.clone()),
    };
    let mut models = BTreeMap::new();
    for (id, path) in &config.models {
        let model = ForecastModel::load(path).map_err(|e| load_err(path, e))?;
        info!("model `{id}`: {} ({})", model.label(), model.task);
        models.insert(id.clone(), model);
    }
    let weather = config
        .weather
        .clone()
        .map(WeatherClient::new)
        .transpose()
        .map_err(|e| ServeError::Load { path: "weather endpoint".into(), message: e.to_string() })?;
    let options = StateOptions {
        token: config.token.clone(),
        stream_capacity: config.stream_capacity,
        weather,
        default_bbox: config.default_bbox,
    };
    let state = AppState::new(store, clock, models, options);
    if let Some((path, speed)) = &config.replay {
        let file = std::fs::File::open(path).map_err(|e| load_err(path, e))?;
        let records = read_records(&catalog, std::io::BufReader::new(file)).map_err(|e| load_err(path, e))?;
        state.start_replay(Replay::new(records), *speed).map_err(|e| load_err(path, e))?;
    }
    Ok(state)
}

/// Serves until `shutdown` resolves, then closes streams and saves the store.
pub async fn serve(config: ServerConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    let state = Arc::new(build_state(&config, Catalog::builtin(), Arc::new(SystemClock))?);
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind { addr: config.bind.to_string(), source })?;
    info!("listening on {}", listener.local_addr()?);
    if config.token.is_empty() {
        warn!("no ingest token configured; ingestion is disabled");
    }

    let ticker = {
        let state = state.clone();
        let period = config.tick;
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
            loop {
                interval.tick().await;
                state.tick();
            }
        })
    };

    let closing = state.clone();
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async move {
            shutdown.await;
            info!("shutting down");
            closing.close_streams();
        })
        .await?;
    ticker.abort();

    if let Some(path) = &config.store_path {
        let n = state.with_store(|s| s.save(path)).map_err(|e| load_err(path, e))?;
        info!("saved {n} records to {}", path.display());
    }
    Ok(())
}
