use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use calibrate_core::scoring::ScoreError;
use calibrate_core::session::SessionError;
use serde::Serialize;

/// Machine-readable error codes. The set is closed; clients may match on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    DeckNotFound,
    SessionNotFound,
    QuestionNotFound,
    DuplicateAnswer,
    InvalidPrediction,
    InvalidInterval,
    InvalidProbability,
    BadEdges,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::DeckNotFound | ErrorCode::SessionNotFound | ErrorCode::QuestionNotFound => {
                StatusCode::NOT_FOUND
            }
            ErrorCode::DuplicateAnswer => StatusCode::CONFLICT,
            ErrorCode::InvalidPrediction | ErrorCode::InvalidInterval | ErrorCode::InvalidProbability => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorCode::BadEdges | ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), detail: None }
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

fn score_code(e: &ScoreError) -> ErrorCode {
    match e {
        ScoreError::ProbabilityOutOfRange { .. } | ScoreError::NonFinite { what: "confidence", .. } => {
            ErrorCode::InvalidProbability
        }
        ScoreError::InvalidInterval(_) | ScoreError::NonPositive { .. } | ScoreError::NonFinite { .. } => {
            ErrorCode::InvalidInterval
        }
        _ => ErrorCode::Internal,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::SessionNotFound(_) => ErrorCode::SessionNotFound,
            SessionError::QuestionNotFound(_) => ErrorCode::QuestionNotFound,
            SessionError::DuplicateAnswer(_) => ErrorCode::DuplicateAnswer,
            SessionError::InvalidPrediction(_) | SessionError::Grade(_) => ErrorCode::InvalidPrediction,
            SessionError::Score(s) => score_code(s),
            SessionError::BadEdges(_) => ErrorCode::BadEdges,
            SessionError::Deck(_) | SessionError::CorruptLog { .. } | SessionError::Io(_) => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}
