//! The twin's notion of time.
//!
//! While playing, simulation time moves at `simulation_speed` times real
//! time, in either direction. System time moves forward at the same rate
//! (never backwards) and is capped at real time. Animation speed is stored
//! for clients and has no effect on either.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use twin_core::time::{from_millis, to_millis};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeState {
    pub real_time: DateTime<Utc>,
    pub system_time: DateTime<Utc>,
    pub simulation_time: DateTime<Utc>,
    pub simulation_speed: f64,
    pub animation_speed: f64,
}

/// Fields of a time update; absent fields keep their value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeUpdate {
    pub system_time: Option<DateTime<Utc>>,
    pub simulation_time: Option<DateTime<Utc>>,
    pub simulation_speed: Option<f64>,
    pub animation_speed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TimeKeeper {
    real_anchor: i64,
    system_anchor: i64,
    simulation_anchor: i64,
    simulation_speed: f64,
    animation_speed: f64,
}

impl TimeKeeper {
    /// System and simulation time start at `real`, playing at speed 1.
    pub fn new(real: DateTime<Utc>) -> Self {
        let r = to_millis(real);
        TimeKeeper {
            real_anchor: r,
            system_anchor: r,
            simulation_anchor: r,
            simulation_speed: 1.0,
            animation_speed: 1.0,
        }
    }

    fn scaled(&self, real: i64, speed: f64) -> i64 {
        ((real - self.real_anchor) as f64 * speed).round() as i64
    }

    pub fn state(&self, real: DateTime<Utc>) -> TimeState {
        let r = to_millis(real);
        let system = (self.system_anchor + self.scaled(r, self.simulation_speed.max(0.0))).min(r);
        let simulation = self.simulation_anchor + self.scaled(r, self.simulation_speed);
        TimeState {
            real_time: real,
            system_time: from_millis(system),
            simulation_time: from_millis(simulation),
            simulation_speed: self.simulation_speed,
            animation_speed: self.animation_speed,
        }
    }

    pub fn system_time(&self, real: DateTime<Utc>) -> DateTime<Utc> {
        self.state(real).system_time
    }

    /// Applies every field of `update` or none of them.
    pub fn apply(&mut self, real: DateTime<Utc>, update: &TimeUpdate) -> Result<TimeState, ApiError> {
        let now = self.state(real);
        if let Some(s) = update.system_time {
            if s > real {
                return Err(ApiError::InvalidTime(format!("system time {s} is after real time {real}")));
            }
        }
        for (name, v) in [("simulation_speed", update.simulation_speed), ("animation_speed", update.animation_speed)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(ApiError::InvalidTime(format!("{name} must be finite")));
            }
        }
        self.real_anchor = to_millis(real);
        self.system_anchor = to_millis(update.system_time.unwrap_or(now.system_time));
        self.simulation_anchor = to_millis(update.simulation_time.unwrap_or(now.simulation_time));
        self.simulation_speed = update.simulation_speed.unwrap_or(now.simulation_speed);
        self.animation_speed = update.animation_speed.unwrap_or(now.animation_speed);
        Ok(self.state(real))
    }
}
