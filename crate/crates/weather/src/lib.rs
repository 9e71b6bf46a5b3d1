//! External wind forecasts for the twin: a regular lon/lat grid of 10 m wind
//! vectors over a few forecast hours, fetched over HTTP or from fixture
//! files, cached per bounding box, and sampled at arbitrary points.

pub mod client;
pub mod error;
pub mod field;
pub mod format;

pub use client::{Fetched, FixtureTransport, ForecastEndpoint, HttpTransport, Transport, WeatherClient};
pub use error::{Result, WeatherError};
pub use field::{speed_direction, BBox, SpeedDirection, WindField};
pub use format::{parse_field, write_field};
