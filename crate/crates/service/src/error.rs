use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("unknown context `{0}`")]
    UnknownContext(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("context `{0}` already exists")]
    DuplicateContext(String),

    #[error("{0}")]
    Conflict(String),

    #[error("{0}")]
    BadRequest(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Core(#[from] adaptrec_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        use adaptrec_core::Error as E;
        match self {
            Self::UnknownSession(_) => "unknown_session",
            Self::UnknownContext(_) => "unknown_context",
            Self::UnknownDocument(_) => "unknown_document",
            Self::DuplicateContext(_) => "duplicate_context",
            Self::Conflict(_) => "conflict",
            Self::BadRequest(_) => "bad_request",
            Self::Config(_) => "config",
            Self::Snapshot(_) => "snapshot",
            Self::Core(e) => match e {
                E::EmptyProfile => "empty_profile",
                E::UnresolvableProfile(_) => "unresolvable_profile",
                E::AlreadyResolved(_) => "already_resolved",
                E::NotInConversation(_) => "not_in_conversation",
                E::UnknownKeyword(_) => "unknown_keyword",
                E::UnknownDocument(_) => "unknown_document",
                E::Malformed { .. } => "malformed",
                E::EmptyCategory => "empty_category",
                E::Io(_) => "io",
                _ => "invalid",
            },
            Self::Io(_) => "io",
            Self::Json(_) => "json",
        }
    }

    pub fn status(&self) -> StatusCode {
        use adaptrec_core::Error as E;
        match self {
            Self::UnknownSession(_) | Self::UnknownContext(_) | Self::UnknownDocument(_) => StatusCode::NOT_FOUND,
            Self::DuplicateContext(_) | Self::Conflict(_) => StatusCode::CONFLICT,
            Self::BadRequest(_) | Self::Json(_) => StatusCode::BAD_REQUEST,
            Self::Core(E::Io(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            Self::Core(E::UnknownDocument(_)) | Self::Core(E::UnknownKeyword(_)) => StatusCode::NOT_FOUND,
            Self::Core(E::AlreadyResolved(_)) => StatusCode::CONFLICT,
            Self::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Config(_) | Self::Snapshot(_) | Self::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn details(&self) -> serde_json::Value {
        match self {
            Self::Core(adaptrec_core::Error::UnresolvableProfile(k)) => json!({ "keywords": k }),
            Self::Core(adaptrec_core::Error::Malformed { line, .. }) => json!({ "line": line }),
            _ => serde_json::Value::Null,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code(), "message": self.to_string() });
        let details = self.details();
        if !details.is_null() {
            error["details"] = details;
        }
        (self.status(), Json(json!({ "error": error }))).into_response()
    }
}
