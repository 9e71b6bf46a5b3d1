use chrono::{DateTime, Utc};
use thiserror::Error;

pub type Result<T, E = WeatherError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("network error after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },

    #[error("wind field parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("wind field shape error: {0}")]
    Shape(String),

    #[error("({lon}, {lat}) at {at} is outside the field")]
    OutOfDomain { lon: f64, lat: f64, at: DateTime<Utc> },

    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),

    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> WeatherError {
    WeatherError::Parse { line, message: message.into() }
}
