mod common;

use axum::body::Body;
use axum::http::Request;
use chrono::TimeDelta;
use common::*;
use http_body_util::BodyExt;
use tower::ServiceExt;
use twin_core::Catalog;
use twin_server::payload::FrameDoc;
use twin_server::{StateOptions, StreamEvent, Subscription};

fn run_seconds(h: &Harness, n: usize) {
    for _ in 0..n {
        h.clock.advance(TimeDelta::seconds(1));
        h.state.tick();
    }
}

fn drain(sub: &mut Subscription) -> Vec<StreamEvent> {
    std::iter::from_fn(|| sub.try_next()).collect()
}

fn frames(events: Vec<StreamEvent>) -> Vec<FrameDoc> {
    events
        .into_iter()
        .map(|e| match e {
            StreamEvent::Frame(f) => f,
            other => panic!("unexpected {other:?}"),
        })
        .collect()
}

fn wind_only() -> Vec<twin_core::ParamId> {
    vec![Catalog::builtin().id("WMET.WindSpeed").unwrap()]
}

#[tokio::test]
async fn ten_seconds_ten_frames() {
    let h = Harness::new();
    h.ingest(&simulate(60, 1)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(5));
    let mut sub = h.state.subscribe(wind_only());
    run_seconds(&h, 10);
    let got = frames(drain(&mut sub));
    assert_eq!(got.iter().map(|f| f.seq).collect::<Vec<_>>(), (1..=10).collect::<Vec<_>>());
    for (i, f) in got.iter().enumerate() {
        assert_eq!(f.ts, sim_start() + TimeDelta::seconds(6 + i as i64));
        assert_eq!(f.values.len(), 1);
        assert!(f.values[0].is_some());
    }
}

#[tokio::test]
async fn subscribers_see_identical_sequences() {
    let h = Harness::new();
    h.ingest(&simulate(60, 2)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(10));
    let all: Vec<_> = Catalog::builtin().ids().collect();
    let (mut a, mut b) = (h.state.subscribe(all.clone()), h.state.subscribe(all));
    run_seconds(&h, 20);
    let (fa, fb) = (frames(drain(&mut a)), frames(drain(&mut b)));
    assert_eq!(fa.len(), 20);
    assert_eq!(fa, fb);
}

#[tokio::test]
async fn late_joiner_gets_no_backfill() {
    let h = Harness::new();
    h.ingest(&simulate(60, 3)).await;
    let start = sim_start() + TimeDelta::seconds(10);
    play_from(&h, start);
    let mut early = h.state.subscribe(wind_only());
    run_seconds(&h, 5);
    let mut late = h.state.subscribe(wind_only());
    run_seconds(&h, 5);
    let late = frames(drain(&mut late));
    assert_eq!(late[0].seq, 1);
    assert_eq!(late[0].ts, start + TimeDelta::seconds(6));
    let early = frames(drain(&mut early));
    assert_eq!(early.len(), 10);
    assert_eq!(early[5].values, late[0].values);
}

#[tokio::test]
async fn sub_second_ticks_emit_each_instant_once() {
    let h = Harness::new();
    h.ingest(&simulate(60, 4)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(5));
    let mut sub = h.state.subscribe(wind_only());
    for _ in 0..73 {
        h.clock.advance(TimeDelta::milliseconds(137));
        h.state.tick();
    }
    let got = frames(drain(&mut sub));
    // 73 * 137 ms = 10.001 s
    assert_eq!(got.len(), 10);
    assert!(got.windows(2).all(|w| w[1].ts - w[0].ts == TimeDelta::seconds(1)));
}

#[tokio::test]
async fn slow_consumer_is_disconnected() {
    let h = Harness::with_options(StateOptions { token: TOKEN.into(), stream_capacity: 4, ..Default::default() });
    h.ingest(&simulate(60, 5)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(5));
    let mut sub = h.state.subscribe(wind_only());
    run_seconds(&h, 10);
    let events = drain(&mut sub);
    assert_eq!(events, vec![StreamEvent::Overflow { skipped: 6 }]);
    run_seconds(&h, 1);
    assert!(sub.try_next().is_none());
}

#[tokio::test]
async fn rewinding_system_time_ends_subscriptions() {
    let h = Harness::new();
    h.ingest(&simulate(120, 6)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(50));
    let mut sub = h.state.subscribe(wind_only());
    run_seconds(&h, 3);
    play_from(&h, sim_start() + TimeDelta::seconds(20));
    run_seconds(&h, 2);
    let mut events = drain(&mut sub);
    assert_eq!(events.pop(), Some(StreamEvent::Rewound { system_time: sim_start() + TimeDelta::seconds(20) }));
    let ts: Vec<i64> = frames(events).iter().map(|f| (f.ts - sim_start()).num_seconds()).collect();
    assert_eq!(ts, vec![51, 52, 53]);
    let mut fresh = h.state.subscribe(wind_only());
    run_seconds(&h, 2);
    let ts: Vec<i64> = frames(drain(&mut fresh)).iter().map(|f| (f.ts - sim_start()).num_seconds()).collect();
    assert_eq!(ts, vec![23, 24]);
}

#[tokio::test]
async fn event_stream_over_http() {
    let h = Harness::new();
    h.ingest(&simulate(60, 7)).await;
    play_from(&h, sim_start() + TimeDelta::seconds(5));
    let req = Request::builder().uri("/api/v1/stream?params=WMET.WindSpeed,WROT.RotorRPM").body(Body::empty()).unwrap();
    let resp = h.app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.into_body();
    run_seconds(&h, 3);

    let mut text = String::new();
    while text.matches("event: frame").count() < 3 {
        let chunk = body.frame().await.unwrap().unwrap();
        if let Ok(data) = chunk.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    let docs: Vec<FrameDoc> = text
        .lines()
        .filter_map(|l| l.strip_prefix("data: "))
        .map(|d| serde_json::from_str(d).unwrap())
        .collect();
    assert_eq!(docs.iter().map(|d| d.seq).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(docs.iter().all(|d| d.values.len() == 2 && d.padded.len() == 2));

    h.state.close_streams();
    while let Some(next) = body.frame().await {
        next.unwrap();
    }
}

#[tokio::test]
async fn unknown_stream_parameter_is_rejected() {
    let h = Harness::new();
    let (s, err) = h.get("/api/v1/stream?params=WMET.Nope").await;
    assert_eq!((s.as_u16(), err["error"].as_str()), (400, Some("unknown_parameter")));
}
