//! HTTP routes under `/api/v1`.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, TimeDelta, Utc};
use futures::Stream;
use serde::Deserialize;
use twin_core::time::format_iso;
use twin_core::{IngestReport, ParameterDef, TelemetryRecord};
use twin_weather::BBox;

use crate::error::ApiError;
use crate::payload::{parse_params, parse_time, ForecastDoc, IngestDoc, ModelDoc, SeriesDoc, WindFieldDoc};
use crate::state::AppState;
use crate::stream::{StreamEvent, Subscription};
use crate::time::{TimeState, TimeUpdate};

/// Upper bound on cells in one historic response.
pub const MAX_HISTORIC_CELLS: usize = 20_000_000;

const DEFAULT_FIELD_HOURS: u32 = 48;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/ingest", post(ingest))
        .route("/api/v1/historic", get(historic))
        .route("/api/v1/stream", get(stream))
        .route("/api/v1/forecast", get(forecast))
        .route("/api/v1/models", get(models))
        .route("/api/v1/time", get(get_time).put(put_time))
        .route("/api/v1/windfield", get(windfield))
        .route("/api/v1/catalog", get(catalog))
        .with_state(state)
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(q)| q).map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn ingest(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> ApiResult<IngestReport> {
    let auth = headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok());
    if !state.authorized(auth) {
        return Err(ApiError::Unauthorized);
    }
    let doc: IngestDoc = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("malformed batch: {e}")))?;
    let catalog = state.catalog();
    let mut unknown = 0;
    let records: Vec<TelemetryRecord> = doc
        .records
        .iter()
        .filter_map(|r| match catalog.id(&r.parameter) {
            Ok(id) => Some(TelemetryRecord::new(r.timestamp, id, r.value, r.source)),
            Err(_) => {
                unknown += 1;
                None
            }
        })
        .collect();
    let mut report = state.ingest(&records);
    report.unknown_parameter += unknown;
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
struct HistoricQuery {
    from: String,
    to: String,
    params: Option<String>,
    step: Option<i64>,
}

async fn historic(State(state): State<Arc<AppState>>, q: Result<Query<HistoricQuery>, QueryRejection>) -> ApiResult<SeriesDoc> {
    let q = query(q)?;
    let from = parse_time("from", &q.from)?;
    let to = parse_time("to", &q.to)?;
    let params = parse_params(state.catalog(), q.params.as_deref())?;
    let step = q.step.unwrap_or(1);
    if step <= 0 {
        return Err(ApiError::BadRequest(format!("step must be a positive number of seconds, got {step}")));
    }
    if from > to {
        return Err(ApiError::InvalidRange(format!("from {} is after to {}", format_iso(from), format_iso(to))));
    }
    let system_time = state.system_time();
    if to > system_time {
        return Err(ApiError::FutureRange { to: format_iso(to), system_time: format_iso(system_time) });
    }
    let rows = ((to - from).num_seconds() / step + 1) as usize;
    if rows.saturating_mul(params.len().max(1)) > MAX_HISTORIC_CELLS {
        return Err(ApiError::InvalidRange(format!("{rows} rows exceed the response limit; use a larger step")));
    }
    let catalog = state.catalog().clone();
    let doc = state.with_store(|s| {
        s.resample(from, to, &params, TimeDelta::seconds(step)).map(|f| SeriesDoc::from_frames(&catalog, &f))
    })?;
    Ok(Json(doc))
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    params: Option<String>,
}

async fn stream(
    State(state): State<Arc<AppState>>,
    q: Result<Query<StreamQuery>, QueryRejection>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let q = query(q)?;
    let mut params = parse_params(state.catalog(), q.params.as_deref())?;
    if params.is_empty() {
        params = state.catalog().ids().collect();
    }
    let sub = state.subscribe(params);
    Ok(Sse::new(events(sub)).keep_alive(KeepAlive::default()))
}

/// Server-sent events for one subscription: `frame` events, then possibly
/// a final `overflow` or `rewound` event.
pub fn events(sub: Subscription) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(sub, |mut sub| async move {
        let event = match sub.next().await? {
            StreamEvent::Frame(doc) => Event::default().event("frame").json_data(&doc),
            StreamEvent::Overflow { skipped } => Event::default().event("overflow").json_data(serde_json::json!({
                "error": "subscriber_overflow",
                "message": format!("fell behind by {skipped} frames; reconnect to resume"),
            })),
            StreamEvent::Rewound { system_time } => Event::default().event("rewound").json_data(serde_json::json!({
                "system_time": system_time,
                "message": "system time moved back; reconnect to follow it",
            })),
        };
        Some((Ok(event.expect("frame serializes")), sub))
    })
}

#[derive(Debug, Deserialize)]
struct ForecastQuery {
    model: String,
    at: Option<String>,
}

async fn forecast(State(state): State<Arc<AppState>>, q: Result<Query<ForecastQuery>, QueryRejection>) -> ApiResult<ForecastDoc> {
    let q = query(q)?;
    let model = state.models().get(&q.model).ok_or_else(|| ApiError::UnknownModel(q.model.clone()))?;
    let system_time = state.system_time();
    let at = match q.at.as_deref() {
        Some(text) => parse_time("at", text)?,
        None => system_time,
    };
    if at > system_time {
        return Err(ApiError::FutureRange { to: format_iso(at), system_time: format_iso(system_time) });
    }
    let values = state.with_store(|s| model.forecast_at(s, at))?;
    let step = model.task.timescale.step();
    let base = DateTime::<Utc>::from_timestamp(at.timestamp() - at.timestamp().rem_euclid(step.num_seconds()), 0)
        .expect("in range");
    Ok(Json(ForecastDoc {
        model: q.model,
        kind: model.kind.to_string(),
        provenance: model.provenance,
        timescale: model.task.timescale,
        at: base,
        parameters: model.task.parameters.clone(),
        timestamps: (1..=model.task.k as i32).map(|i| base + step * i).collect(),
        values: values.rows().into_iter().map(|r| r.to_vec()).collect(),
        norm_version: model.norm.as_ref().map(|n| n.fingerprint()),
    }))
}

async fn models(State(state): State<Arc<AppState>>) -> Json<Vec<ModelDoc>> {
    Json(
        state
            .models()
            .iter()
            .map(|(id, m)| ModelDoc {
                id: id.clone(),
                kind: m.kind.to_string(),
                provenance: m.provenance,
                timescale: m.task.timescale,
                m: m.task.m,
                k: m.task.k,
                parameters: m.task.parameters.clone(),
            })
            .collect(),
    )
}

async fn get_time(State(state): State<Arc<AppState>>) -> Json<TimeState> {
    Json(state.time_state())
}

async fn put_time(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<TimeState> {
    let update: TimeUpdate =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("malformed time update: {e}")))?;
    Ok(Json(state.update_time(&update)?))
}

#[derive(Debug, Deserialize)]
struct WindfieldQuery {
    bbox: Option<String>,
    hours: Option<u32>,
}

async fn windfield(State(state): State<Arc<AppState>>, q: Result<Query<WindfieldQuery>, QueryRejection>) -> ApiResult<WindFieldDoc> {
    let q = query(q)?;
    let bbox: BBox = match q.bbox.as_deref() {
        Some(text) => text.parse().map_err(|e| ApiError::BadRequest(format!("bbox: {e}")))?,
        None => state.default_bbox().ok_or_else(|| ApiError::BadRequest("bbox is required".into()))?,
    };
    let client = state.weather().cloned().ok_or_else(|| ApiError::NoFieldAvailable("no weather source configured".into()))?;
    let hours = q.hours.unwrap_or(DEFAULT_FIELD_HOURS);
    let fetched = tokio::task::spawn_blocking(move || client.fetch(&bbox, hours))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::NoFieldAvailable(e.to_string()))?;
    if !fetched.field.bbox.contains(&bbox) {
        return Err(ApiError::NoFieldAvailable(format!("field covers {}, not {bbox}", fetched.field.bbox)));
    }
    Ok(Json(WindFieldDoc { stale: fetched.stale, field: fetched.field.truncate_hours(hours) }))
}

async fn catalog(State(state): State<Arc<AppState>>) -> Json<Vec<ParameterDef>> {
    Json(state.catalog().params().to_vec())
}
