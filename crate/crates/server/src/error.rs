use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use therapy_core::api::ErrorBody;
use therapy_core::{DspError, ProgramError};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

pub type ApiResult<T> = Result<T, ApiError>;

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                fields: Vec::new(),
            },
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} {id} not found"))
    }

    pub fn forbidden() -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", "caller may not access this resource")
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", message)
    }

    pub fn validation(fields: Vec<String>, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message);
        e.body.fields = fields;
        e
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(err: impl std::fmt::Display) -> Self {
        tracing::error!(error = %err, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal server error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(e)
    }
}

/// Upload analysis failures.
impl From<DspError> for ApiError {
    fn from(e: DspError) -> Self {
        match e {
            DspError::Decode(_) | DspError::UnsupportedFormat(_) | DspError::EmptyAudio => {
                ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_audio", e.to_string())
            }
            DspError::EmptySpeech => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "empty_speech",
                "no speech detected; the attempt was not counted",
            ),
            DspError::TooShort(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "too_short", e.to_string()),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "analysis_failed", other.to_string()),
        }
    }
}

impl From<ProgramError> for ApiError {
    fn from(e: ProgramError) -> Self {
        let msg = e.to_string();
        match e {
            ProgramError::InsufficientDictionary { stage, .. } => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "insufficient_dictionary", msg);
                err.body.fields = vec![stage];
                err
            }
            ProgramError::InvalidDictionary(_) | ProgramError::InvalidEdit(_) | ProgramError::InvalidCloseness(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", msg)
            }
            ProgramError::StaleAttempt { .. } => ApiError::new(StatusCode::CONFLICT, "stale_prompt", msg),
            ProgramError::Completed => ApiError::new(StatusCode::CONFLICT, "program_completed", msg),
            ProgramError::Unauthorized(_) => ApiError::forbidden(),
            ProgramError::UnknownItem(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_item", msg),
        }
    }
}
