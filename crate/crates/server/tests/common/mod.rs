#![allow(dead_code)]

pub mod causality;
pub mod pipeline;
pub mod replay;

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use twin_core::{Catalog, SimConfig, Simulator, TelemetryRecord, TimeSeriesStore};
use twin_forecast::ForecastModel;
use twin_server::payload::IngestDoc;
use twin_server::{router, AppState, ManualClock, StateOptions, TimeUpdate};

pub const TOKEN: &str = "test-token";

/// Real time during tests, a day after the simulated data starts.
pub fn real_now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 2, 2, 0, 0, 0).unwrap()
}

pub fn sim_start() -> DateTime<Utc> {
    SimConfig::default().start
}

pub struct Harness {
    pub state: Arc<AppState>,
    pub clock: Arc<ManualClock>,
    pub app: Router,
}

impl Harness {
    pub fn new() -> Self {
        Harness::with_options(StateOptions { token: TOKEN.into(), ..Default::default() })
    }

    pub fn with_options(options: StateOptions) -> Self {
        Harness::with_models(BTreeMap::new(), options)
    }

    pub fn with_models(models: BTreeMap<String, ForecastModel>, options: StateOptions) -> Self {
        let clock = Arc::new(ManualClock::new(real_now()));
        let store = TimeSeriesStore::new(Catalog::builtin());
        let state = Arc::new(AppState::new(store, clock.clone(), models, options));
        let app = router(state.clone());
        Harness { state, clock, app }
    }

    /// Pauses with system and simulation time at `at`.
    pub fn freeze_at(&self, at: DateTime<Utc>) {
        let update = TimeUpdate {
            system_time: Some(at),
            simulation_time: Some(at),
            simulation_speed: Some(0.0),
            ..Default::default()
        };
        self.state.update_time(&update).unwrap();
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<String>, token: Option<&str>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, Value) {
        let (s, b) = self.call(Method::GET, uri, None, None).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    pub async fn get_raw(&self, uri: &str) -> (StatusCode, Vec<u8>) {
        self.call(Method::GET, uri, None, None).await
    }

    pub async fn put_time(&self, body: Value) -> (StatusCode, Value) {
        let (s, b) = self.call(Method::PUT, "/api/v1/time", Some(body.to_string()), None).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    pub async fn ingest(&self, records: &[TelemetryRecord]) -> (StatusCode, Value) {
        self.ingest_with(records, Some(TOKEN)).await
    }

    pub async fn ingest_with(&self, records: &[TelemetryRecord], token: Option<&str>) -> (StatusCode, Value) {
        let doc = IngestDoc::from_records(self.state.catalog(), records);
        let body = serde_json::to_string(&doc).unwrap();
        let (s, b) = self.call(Method::POST, "/api/v1/ingest", Some(body), token).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }
}

/// Seeded simulator output covering `seconds` after the default start.
pub fn simulate(seconds: u64, seed: u64) -> Vec<TelemetryRecord> {
    let config = SimConfig { seed, ..SimConfig::default() };
    Simulator::new(config, Catalog::builtin()).unwrap().run(seconds, 1)
}

pub fn iso(t: DateTime<Utc>) -> String {
    twin_core::time::format_iso(t)
}

/// Plays from `at` at speed 1.
pub fn play_from(h: &Harness, at: DateTime<Utc>) {
    let update = TimeUpdate { system_time: Some(at), simulation_time: Some(at), simulation_speed: Some(1.0), ..Default::default() };
    h.state.update_time(&update).unwrap();
}
