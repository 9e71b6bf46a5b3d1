//! Future-record mutations against every payload up to system time.

use std::collections::BTreeMap;

use chrono::{DateTime, TimeDelta, Utc};
use proptest::prelude::*;
use twin_core::{Catalog, NormalizationStats, ParamStats, Source, TelemetryRecord};
use twin_forecast::{ForecastModel, ForecastTask, Timescale, Topology};
use twin_server::{StateOptions, StreamEvent};

use super::*;

const HISTORY: u64 = 240;

fn models() -> BTreeMap<String, ForecastModel> {
    let catalog = Catalog::builtin();
    let task = ForecastTask::new(Timescale::Seconds, 8, 3, catalog.forecast_set().iter().map(|s| s.to_string()).collect()).unwrap();
    let mut lstm = ForecastModel::network(task.clone(), Topology::lstm(task.shape(), 6, 5), 3).unwrap();
    lstm.norm = Some(NormalizationStats {
        params: task
            .parameters
            .iter()
            .map(|p| {
                let def = catalog.lookup(p).unwrap();
                ParamStats::from_values(p, [def.lower_bound, def.upper_bound]).unwrap()
            })
            .collect(),
    });
    let dnn = ForecastModel::network(task.clone(), Topology::dnn(task.shape(), &[7]), 4).unwrap();
    BTreeMap::from([("lstm".to_string(), lstm), ("dnn".to_string(), dnn)])
}

/// Every payload the server can produce about instants up to `now`.
async fn payloads(h: &Harness, now: DateTime<Utc>, step: i64) -> Vec<Vec<u8>> {
    let all = Catalog::builtin().params().iter().map(|p| p.id.clone()).collect::<Vec<_>>().join(",");
    let mut out = Vec::new();
    let early = iso(now - TimeDelta::seconds(90));
    for (from, step) in [(early.clone(), 1), (early, step), (iso(sim_start()), step)] {
        let (s, body) = h.get_raw(&format!("/api/v1/historic?from={from}&to={}&params={all}&step={step}", iso(now))).await;
        assert!(s.is_success(), "{}", String::from_utf8_lossy(&body));
        out.push(body);
    }
    for model in ["persistence", "lstm", "dnn"] {
        for back in [0, 7] {
            let at = iso(now - TimeDelta::seconds(back));
            let (s, body) = h.get_raw(&format!("/api/v1/forecast?model={model}&at={at}")).await;
            assert!(s.is_success(), "{}", String::from_utf8_lossy(&body));
            out.push(body);
        }
    }
    out
}

/// Frames streamed while system time runs up to `now`.
fn streamed(h: &Harness, now: DateTime<Utc>) -> Vec<Vec<u8>> {
    play_from(h, now - TimeDelta::seconds(20));
    let mut sub = h.state.subscribe(Catalog::builtin().ids().collect());
    let mut out = Vec::new();
    for _ in 0..20 {
        h.clock.advance(TimeDelta::seconds(1));
        h.state.tick();
        while let Some(StreamEvent::Frame(f)) = sub.try_next() {
            out.push(serde_json::to_vec(&f).unwrap());
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Mutation {
    after_ms: i64,
    param: usize,
    value: f64,
}

fn arb_mutation() -> impl Strategy<Value = Mutation> {
    (prop_oneof![Just(1i64), 1i64..2_000, 1i64..400_000], 0usize..64, prop_oneof![-1e4..1e4f64, Just(0.0), Just(f64::NAN)])
        .prop_map(|(after_ms, param, value)| Mutation { after_ms, param, value })
}

fn apply(h: &Harness, now: DateTime<Utc>, mutations: &[Mutation]) {
    let catalog = Catalog::builtin();
    let records: Vec<TelemetryRecord> = mutations
        .iter()
        .map(|m| {
            let id = twin_core::ParamId((m.param % catalog.len()) as u16);
            TelemetryRecord::new(now + TimeDelta::milliseconds(m.after_ms), id, m.value, Source::Live)
        })
        .collect();
    h.state.ingest(&records);
}

/// Runs one case: the same history with and without `mutations` after `now`.
pub fn check(seed: u64, at: i64, step: i64, mutations: &[Mutation], sub_ms: i64) -> Result<(), String> {
    let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
    let now = sim_start() + TimeDelta::seconds(at) + TimeDelta::milliseconds(sub_ms);
    let records = simulate(HISTORY, seed);

    let run = |mutate: bool| -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
        let h = Harness::with_models(models(), StateOptions::default());
        h.state.ingest(&records);
        if mutate {
            apply(&h, now, mutations);
        }
        let stream = streamed(&h, now);
        // Streaming leaves system time at `now`, paused for the queries.
        h.freeze_at(now);
        (rt.block_on(payloads(&h, now, step)), stream)
    };
    let (clean, clean_stream) = run(false);
    let (mutated, mutated_stream) = run(true);
    if clean_stream.len() != 20 {
        return Err(format!("{} frames streamed, expected 20", clean_stream.len()));
    }
    if clean_stream != mutated_stream {
        return Err("stream frames changed".into());
    }
    match clean.iter().zip(&mutated).position(|(a, b)| a != b) {
        Some(i) => Err(format!("payload {i} changed")),
        None => Ok(()),
    }
}

/// Inputs for [`check`].
pub fn arb_case() -> impl Strategy<Value = (u64, i64, i64, Vec<Mutation>, i64)> {
    (
        0u64..1000,
        60i64..(HISTORY as i64 - 30),
        1i64..7,
        proptest::collection::vec(arb_mutation(), 1..40),
        0i64..1000,
    )
}
