//! Per-subscriber views of the broadcast frame feed.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use tokio::sync::{broadcast, watch};
use twin_core::ParamId;

use crate::payload::FrameDoc;

/// One grid instant across the whole catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub ts: DateTime<Utc>,
    pub values: Vec<f64>,
    pub padded: Vec<bool>,
    pub missing: Vec<bool>,
}

/// What the ticker broadcasts.
#[derive(Debug, Clone)]
pub(crate) enum Feed {
    Frame(Arc<Frame>),
    /// System time was moved back; subscriptions end here.
    Rewound(DateTime<Utc>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    Frame(FrameDoc),
    /// The subscriber fell behind by `skipped` frames and is dropped.
    Overflow { skipped: u64 },
    /// System time was set back to `system_time`; reconnect to follow it.
    Rewound { system_time: DateTime<Utc> },
}

pub struct Subscription {
    rx: broadcast::Receiver<Feed>,
    columns: Vec<ParamId>,
    closed: watch::Receiver<bool>,
    seq: u64,
    done: bool,
}

impl Subscription {
    pub(crate) fn new(rx: broadcast::Receiver<Feed>, columns: Vec<ParamId>, closed: watch::Receiver<bool>) -> Self {
        Subscription { rx, columns, closed, seq: 0, done: false }
    }

    pub fn columns(&self) -> &[ParamId] {
        &self.columns
    }

    fn project(&mut self, frame: &Frame) -> FrameDoc {
        self.seq += 1;
        let pick = |c: &ParamId| c.index();
        FrameDoc {
            seq: self.seq,
            ts: frame.ts,
            values: self
                .columns
                .iter()
                .map(pick)
                .map(|i| (!frame.missing[i]).then_some(frame.values[i]))
                .collect(),
            padded: self.columns.iter().map(pick).map(|i| frame.padded[i]).collect(),
        }
    }

    fn on_feed(&mut self, feed: Feed) -> StreamEvent {
        match feed {
            Feed::Frame(frame) => StreamEvent::Frame(self.project(&frame)),
            Feed::Rewound(system_time) => {
                self.done = true;
                StreamEvent::Rewound { system_time }
            }
        }
    }

    /// Next event, or `None` once the feed or the server has closed.
    /// Overflow and rewind events are always the last one.
    pub async fn next(&mut self) -> Option<StreamEvent> {
        if self.done {
            return None;
        }
        let received = tokio::select! {
            biased;
            _ = self.closed.wait_for(|c| *c) => return None,
            r = self.rx.recv() => r,
        };
        match received {
            Ok(feed) => Some(self.on_feed(feed)),
            Err(broadcast::error::RecvError::Lagged(skipped)) => {
                self.done = true;
                Some(StreamEvent::Overflow { skipped })
            }
            Err(broadcast::error::RecvError::Closed) => None,
        }
    }

    /// Next event if one is already queued.
    pub fn try_next(&mut self) -> Option<StreamEvent> {
        if self.done {
            return None;
        }
        match self.rx.try_recv() {
            Ok(feed) => Some(self.on_feed(feed)),
            Err(broadcast::error::TryRecvError::Lagged(skipped)) => {
                self.done = true;
                Some(StreamEvent::Overflow { skipped })
            }
            Err(_) => None,
        }
    }
}
