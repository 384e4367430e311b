use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use repgame::SessionError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every failure the service reports. Each variant maps to a stable
/// machine-readable code and an HTTP status.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("no session with id `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` expired after being idle")]
    Expired(String),
    #[error("malformed request body: {0}")]
    BadRequest(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Session(e) => e.code(),
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::Expired(_) => "session_expired",
            ApiError::BadRequest(_) => "bad_request",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Session(e) => match e {
                SessionError::UnknownAgent(_) | SessionError::InvalidGame(_) => StatusCode::BAD_REQUEST,
                SessionError::WrongPhase { .. } | SessionError::TalkDisabled => StatusCode::CONFLICT,
                SessionError::InvalidAct(_) | SessionError::InvalidAction(_) => StatusCode::UNPROCESSABLE_ENTITY,
                SessionError::AgentFailure(_) => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::Expired(_) => StatusCode::GONE,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
        }
    }
}

/// Error response body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code().to_string(),
                message: self.to_string(),
            },
        };
        (self.status(), Json(body)).into_response()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use repgame::session::Phase;

    #[test]
    fn codes_and_statuses() {
        let e = ApiError::from(SessionError::WrongPhase {
            actual: Phase::AwaitingAction,
        });
        assert_eq!((e.code(), e.status()), ("wrong_phase", StatusCode::CONFLICT));
        let e = ApiError::from(SessionError::InvalidAct("x".into()));
        assert_eq!(e.status(), StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(ApiError::UnknownSession("a".into()).code(), "unknown_session");
        assert_eq!(ApiError::Expired("a".into()).status(), StatusCode::GONE);
    }
}
