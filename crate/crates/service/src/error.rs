use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use movecorpus::bootstrap::LoopError;
use movecorpus::committee::CommitteeError;
use movecorpus::corpus::store::StoreError;
use movecorpus::corpus::StatementError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Wire form of every error: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.into(), message: message.into(), detail: Value::Null } }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown bearer token")
    }

    pub fn forbidden(needed: &str) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", format!("this endpoint needs the {needed} role"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<StatementError> for ApiError {
    fn from(e: StatementError) -> Self {
        let msg = e.to_string();
        match e {
            StatementError::SpanOutOfRange { span, len } => Self::new(StatusCode::BAD_REQUEST, "invalid_span", msg)
                .with_detail(json!({"start": span.start, "end": span.end, "text_len": len})),
            StatementError::UnknownEntityType(_) => Self::new(StatusCode::BAD_REQUEST, "unknown_entity_type", msg),
            StatementError::Duplicate(_) => Self::new(StatusCode::CONFLICT, "duplicate", msg),
            StatementError::LabelConflict(_) => Self::new(StatusCode::CONFLICT, "label_conflict", msg),
            StatementError::DocumentNotFilteredIn { .. } => {
                Self::new(StatusCode::CONFLICT, "document_not_filtered_in", msg)
            }
            StatementError::UnknownDocument(_) => Self::new(StatusCode::NOT_FOUND, "unknown_document", msg),
            StatementError::UnknownStatement(_) => Self::new(StatusCode::NOT_FOUND, "unknown_statement", msg),
            StatementError::DuplicateVote { statement_id, .. } => Self::new(
                StatusCode::CONFLICT,
                "duplicate_vote",
                format!("this worker already voted on statement {statement_id}"),
            ),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Statement(s) => s.into(),
            StoreError::DuplicateDocument(id) => {
                Self::new(StatusCode::CONFLICT, "duplicate_document", format!("document {id} already ingested"))
            }
            other => Self::internal(other.to_string()),
        }
    }
}

impl From<LoopError> for ApiError {
    fn from(e: LoopError) -> Self {
        let msg = e.to_string();
        match e {
            LoopError::EmptyPool => Self::new(StatusCode::CONFLICT, "empty_pool", msg),
            LoopError::NeedBothClasses { positives, negatives } => Self::new(StatusCode::CONFLICT, "need_both_classes", msg)
                .with_detail(json!({"positives": positives, "negatives": negatives})),
            LoopError::UnknownCandidate(_) => Self::new(StatusCode::NOT_FOUND, "unknown_candidate", msg),
            LoopError::AlreadyReviewed(_) => Self::new(StatusCode::CONFLICT, "already_reviewed", msg),
            LoopError::InsufficientNegatives { needed, available } => {
                Self::new(StatusCode::CONFLICT, "insufficient_negatives", msg)
                    .with_detail(json!({"needed": needed, "available": available, "shortfall": needed - available}))
            }
            LoopError::InvalidConfig(_) => Self::bad_request(msg),
            LoopError::Committee(CommitteeError::TooFewModels { needed, available }) => {
                Self::new(StatusCode::CONFLICT, "too_few_models", msg)
                    .with_detail(json!({"needed": needed, "available": available}))
            }
            _ => Self::internal(msg),
        }
    }
}
