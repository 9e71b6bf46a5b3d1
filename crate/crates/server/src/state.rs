//! Shared server state and the frame ticker.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, TimeDelta, Utc};
use log::{debug, info};
use tokio::sync::{broadcast, watch};
use twin_core::time::{floor_to_grid, from_millis, to_millis};
use twin_core::{Catalog, IngestReport, ParamId, TelemetryRecord, TimeSeriesStore};
use twin_forecast::{ForecastModel, ForecastTask, Timescale};
use twin_weather::{BBox, WeatherClient};

use crate::clock::Clock;
use crate::error::ApiError;
use crate::stream::{Feed, Frame, Subscription};
use crate::time::{TimeKeeper, TimeState, TimeUpdate};

const SECOND_MS: i64 = 1000;

/// Recorded telemetry fed into the store as system time passes it.
#[derive(Debug, Default)]
pub struct Replay {
    records: Vec<TelemetryRecord>,
    next: usize,
}

impl Replay {
    pub fn new(mut records: Vec<TelemetryRecord>) -> Self {
        records.sort_by_key(|r| r.timestamp);
        Replay { records, next: 0 }
    }

    pub fn first_time(&self) -> Option<DateTime<Utc>> {
        self.records.first().map(|r| r.timestamp)
    }

    pub fn remaining(&self) -> usize {
        self.records.len() - self.next
    }

    fn take_until(&mut self, until: DateTime<Utc>) -> &[TelemetryRecord] {
        let start = self.next;
        self.next += self.records[start..].partition_point(|r| r.timestamp <= until);
        &self.records[start..self.next]
    }
}

struct Ticker {
    /// Last grid instant (ms) a frame was emitted for.
    cursor: Option<i64>,
    replay: Option<Replay>,
}

pub struct StateOptions {
    pub token: String,
    pub stream_capacity: usize,
    pub weather: Option<WeatherClient>,
    pub default_bbox: Option<BBox>,
}

impl Default for StateOptions {
    fn default() -> Self {
        StateOptions { token: String::new(), stream_capacity: 1024, weather: None, default_bbox: None }
    }
}

pub struct AppState {
    catalog: Arc<Catalog>,
    store: RwLock<TimeSeriesStore>,
    time: Mutex<TimeKeeper>,
    clock: Arc<dyn Clock>,
    ticker: Mutex<Ticker>,
    models: BTreeMap<String, ForecastModel>,
    weather: Option<Arc<WeatherClient>>,
    default_bbox: Option<BBox>,
    token: String,
    frames: broadcast::Sender<Feed>,
    closed: watch::Sender<bool>,
}

impl AppState {
    /// Registers a built-in `persistence` model next to `models`.
    pub fn new(
        store: TimeSeriesStore,
        clock: Arc<dyn Clock>,
        models: BTreeMap<String, ForecastModel>,
        options: StateOptions,
    ) -> Self {
        let catalog = store.catalog().clone();
        let mut models = models;
        models
            .entry("persistence".into())
            .or_insert_with(|| ForecastModel::persistence(ForecastTask::standard(Timescale::Seconds, &catalog)));
        let (frames, _) = broadcast::channel(options.stream_capacity.max(1));
        let (closed, _) = watch::channel(false);
        AppState {
            catalog,
            store: RwLock::new(store),
            time: Mutex::new(TimeKeeper::new(clock.now())),
            clock,
            ticker: Mutex::new(Ticker { cursor: None, replay: None }),
            models,
            weather: options.weather.map(Arc::new),
            default_bbox: options.default_bbox,
            token: options.token,
            frames,
            closed,
        }
    }

    /// Starts replaying `replay` at its first record, playing at `speed`.
    pub fn start_replay(&self, replay: Replay, speed: f64) -> Result<(), ApiError> {
        let first = replay.first_time().ok_or_else(|| ApiError::BadRequest("replay file is empty".into()))?;
        let mut ticker = self.ticker.lock().expect("ticker lock");
        let mut time = self.time.lock().expect("time lock");
        let update = TimeUpdate {
            system_time: Some(first),
            simulation_time: Some(first),
            simulation_speed: Some(speed),
            ..Default::default()
        };
        time.apply(self.clock.now(), &update)?;
        ticker.cursor = Some(floor_to_grid(to_millis(first), SECOND_MS) - SECOND_MS);
        info!("replaying {} records from {first} at speed {speed}", replay.remaining());
        ticker.replay = Some(replay);
        Ok(())
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn models(&self) -> &BTreeMap<String, ForecastModel> {
        &self.models
    }

    pub fn weather(&self) -> Option<&Arc<WeatherClient>> {
        self.weather.as_ref()
    }

    pub fn default_bbox(&self) -> Option<BBox> {
        self.default_bbox
    }

    pub fn authorized(&self, header: Option<&str>) -> bool {
        let token = header.and_then(|h| h.strip_prefix("Bearer ")).map(str::trim);
        !self.token.is_empty() && token == Some(self.token.as_str())
    }

    pub fn time_state(&self) -> TimeState {
        self.time.lock().expect("time lock").state(self.clock.now())
    }

    pub fn system_time(&self) -> DateTime<Utc> {
        self.time_state().system_time
    }

    /// Applies a time update. A new system time restarts the stream at the
    /// next grid instant after it; moving it back ends open subscriptions.
    pub fn update_time(&self, update: &TimeUpdate) -> Result<TimeState, ApiError> {
        let mut ticker = self.ticker.lock().expect("ticker lock");
        let state = self.time.lock().expect("time lock").apply(self.clock.now(), update)?;
        if update.system_time.is_some() {
            let cursor = floor_to_grid(to_millis(state.system_time), SECOND_MS);
            if ticker.cursor.is_some_and(|c| cursor < c) {
                let _ = self.frames.send(Feed::Rewound(state.system_time));
            }
            ticker.cursor = Some(cursor);
        }
        Ok(state)
    }

    pub fn ingest(&self, records: &[TelemetryRecord]) -> IngestReport {
        self.store.write().expect("store lock").ingest_batch(records)
    }

    pub fn with_store<T>(&self, f: impl FnOnce(&TimeSeriesStore) -> T) -> T {
        f(&self.store.read().expect("store lock"))
    }

    pub fn subscribe(&self, columns: Vec<ParamId>) -> Subscription {
        Subscription::new(self.frames.subscribe(), columns, self.closed.subscribe())
    }

    /// Ends every open subscription.
    pub fn close_streams(&self) {
        self.closed.send_replace(true);
    }

    /// Feeds due replay records into the store, then broadcasts one frame per
    /// whole second passed by system time since the last tick. Returns the
    /// number of frames sent.
    pub fn tick(&self) -> usize {
        let mut ticker = self.ticker.lock().expect("ticker lock");
        let system = self.system_time();
        let target = floor_to_grid(to_millis(system), SECOND_MS);

        if let Some(replay) = ticker.replay.as_mut() {
            let due = replay.take_until(system);
            if !due.is_empty() {
                let report = self.ingest(due);
                debug!("replay ingested {} records: {report:?}", due.len());
            }
        }

        let cursor = *ticker.cursor.get_or_insert(target);
        if target <= cursor {
            return 0;
        }
        let all: Vec<ParamId> = self.catalog.ids().collect();
        let frames = self
            .with_store(|s| s.resample(from_millis(cursor + SECOND_MS), from_millis(target), &all, TimeDelta::seconds(1)))
            .expect("grid range is valid");
        ticker.cursor = Some(target);
        for row in 0..frames.len() {
            let frame = Frame {
                ts: frames.timestamp(row),
                values: frames.values.row(row).to_vec(),
                padded: (0..all.len()).map(|c| frames.padded(row, c)).collect(),
                missing: (0..all.len()).map(|c| frames.missing(row, c)).collect(),
            };
            // No receivers is not an error.
            let _ = self.frames.send(Feed::Frame(Arc::new(frame)));
        }
        frames.len()
    }
}
