//! Simulator output through ingest, historic and stream.

use std::collections::{BTreeMap, BTreeSet};

use chrono::TimeDelta;
use serde_json::Value;
use twin_core::{Catalog, ParamId, SimConfig};
use twin_server::StreamEvent;

use super::*;

const HOUR: i64 = 3600;

/// Simulates an hour, ingests it over HTTP, and checks the historic grid
/// and the stream against the raw records. Panics on any mismatch.
pub async fn round_trip() {
    let catalog = Catalog::builtin();
    let records = simulate(HOUR as u64, 11);
    let h = Harness::new();
    for chunk in records.chunks(5000) {
        let (s, report) = h.ingest(chunk).await;
        assert!(s.is_success());
        assert_eq!(report["accepted"].as_u64().unwrap() as usize, chunk.len());
    }

    let emitted: Vec<ParamId> = records.iter().map(|r| r.parameter).collect::<BTreeSet<_>>().into_iter().collect();
    let names: Vec<&str> = emitted.iter().map(|&p| catalog.name(p)).collect();
    let raw: BTreeMap<(i64, ParamId), f64> = records.iter().map(|r| ((r.timestamp - sim_start()).num_seconds(), r.parameter)).zip(records.iter().map(|r| r.value)).collect();

    let end = sim_start() + TimeDelta::seconds(HOUR);
    h.freeze_at(end);
    let (s, doc) = h.get(&format!("/api/v1/historic?from={}&to={}&params={}", iso(sim_start()), iso(end), names.join(","))).await;
    assert!(s.is_success(), "{doc}");
    let timestamps = doc["timestamps"].as_array().unwrap();
    assert_eq!(timestamps.len(), HOUR as usize + 1);
    for (r, ts) in timestamps.iter().enumerate() {
        assert_eq!(ts.as_str().unwrap(), iso(sim_start() + TimeDelta::seconds(r as i64)));
    }

    let cadence = SimConfig::default().cadence;
    let values = doc["values"].as_array().unwrap();
    let padded = doc["padded"].as_array().unwrap();
    for (c, &p) in emitted.iter().enumerate() {
        let every = cadence[&catalog.def(p).node] as i64;
        for r in every as usize..=HOUR as usize {
            let v = &values[r][c];
            let fresh = (r as i64) % every == 0;
            assert!(!v.is_null(), "{} missing at +{r}s", names[c]);
            assert_eq!(padded[r][c].as_bool().unwrap(), !fresh, "{} at +{r}s", names[c]);
            let source = r as i64 - (r as i64 % every);
            assert_eq!(v.as_f64().unwrap(), raw[&(source, p)], "{} at +{r}s", names[c]);
        }
    }

    play_from(&h, sim_start());
    let mut sub = h.state.subscribe(emitted.clone());
    let mut frames = Vec::new();
    for _ in 0..HOUR {
        h.clock.advance(TimeDelta::seconds(1));
        h.state.tick();
        while let Some(event) = sub.try_next() {
            match event {
                StreamEvent::Frame(f) => frames.push(f),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    assert_eq!(frames.len(), HOUR as usize);
    for (i, f) in frames.iter().enumerate() {
        let row = i + 1;
        assert_eq!(f.seq, row as u64);
        assert_eq!(f.ts, sim_start() + TimeDelta::seconds(row as i64));
        let expected: Vec<Option<f64>> = values[row].as_array().unwrap().iter().map(Value::as_f64).collect();
        assert_eq!(f.values, expected);
        let mask: Vec<bool> = padded[row].as_array().unwrap().iter().map(|b| b.as_bool().unwrap()).collect();
        assert_eq!(f.padded, mask);
    }
}
