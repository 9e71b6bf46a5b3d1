//! Replaying a record file on a manual clock.

use std::sync::Arc;

use chrono::TimeDelta;
use twin_core::Catalog;
use twin_server::payload::FrameDoc;
use twin_server::{build_state, ManualClock, ServerConfig, StreamEvent};

use super::*;

/// Frames seen while replaying `path` at `speed` on 100 ms ticks, and the
/// number of ticks it took.
pub fn frames(path: &std::path::Path, speed: f64, wanted: usize) -> (Vec<FrameDoc>, usize) {
    let clock = Arc::new(ManualClock::new(real_now()));
    let config = ServerConfig { replay: Some((path.to_path_buf(), speed)), stream_capacity: 1 << 16, ..ServerConfig::default() };
    let state = build_state(&config, Catalog::builtin(), clock.clone()).unwrap();
    let mut sub = state.subscribe(Catalog::builtin().ids().collect());
    let mut frames = Vec::new();
    let mut ticks = 0;
    while frames.len() < wanted {
        clock.advance(TimeDelta::milliseconds(100));
        state.tick();
        ticks += 1;
        while let Some(event) = sub.try_next() {
            match event {
                StreamEvent::Frame(f) => frames.push(f),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    frames.truncate(wanted);
    (frames, ticks)
}
