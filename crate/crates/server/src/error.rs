use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("missing or invalid bearer token")]
    Unauthorized,

    #[error("{0}")]
    BadRequest(String),

    #[error("{0}")]
    InvalidRange(String),

    #[error("requested range ends at {to}, after system time {system_time}")]
    FutureRange { to: String, system_time: String },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{0}")]
    InsufficientHistory(String),

    #[error("{0}")]
    InvalidTime(String),

    #[error("no wind field available: {0}")]
    NoFieldAvailable(String),

    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Unauthorized => "unauthorized",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::InvalidRange(_) => "invalid_range",
            ApiError::FutureRange { .. } => "future_range",
            ApiError::UnknownParameter(_) => "unknown_parameter",
            ApiError::UnknownModel(_) => "unknown_model",
            ApiError::InsufficientHistory(_) => "insufficient_history",
            ApiError::InvalidTime(_) => "invalid_time",
            ApiError::NoFieldAvailable(_) => "no_field_available",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::BadRequest(_) | ApiError::InvalidRange(_) | ApiError::UnknownParameter(_) => StatusCode::BAD_REQUEST,
            ApiError::FutureRange { .. } | ApiError::InsufficientHistory(_) | ApiError::InvalidTime(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ApiError::UnknownModel(_) | ApiError::NoFieldAvailable(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}

impl From<twin_core::Error> for ApiError {
    fn from(e: twin_core::Error) -> Self {
        use twin_core::Error as E;
        match e {
            E::UnknownParameter(p) => ApiError::UnknownParameter(p),
            E::InvalidRange { .. } => ApiError::InvalidRange(e.to_string()),
            E::InsufficientHistory { .. } => ApiError::InsufficientHistory(e.to_string()),
            E::InvalidStep(_) | E::EmptyRange(_) => ApiError::BadRequest(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<twin_forecast::ForecastError> for ApiError {
    fn from(e: twin_forecast::ForecastError) -> Self {
        match e {
            twin_forecast::ForecastError::Core(c) => c.into(),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

/// Server start-up and shutdown failures.
#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },

    #[error("loading `{path}`: {message}")]
    Load { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
