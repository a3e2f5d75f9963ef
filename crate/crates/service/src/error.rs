//! Error bodies sent over the wire.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use divex_core::catalog::CatalogError;
use divex_core::explore::ExploreError;
use divex_core::search::SearchError;
use divex_core::som::SomError;
use serde::Serialize;
use serde_json::Value;

/// Machine-readable error codes. This list is closed; clients may match on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidParameter,
    UnknownVideo,
    OrdinalOutOfRange,
    UnknownSource,
    NoSuchConcept,
    UnknownFeaturemap,
    MissingFeature,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::InvalidParameter => StatusCode::BAD_REQUEST,
            ErrorCode::MissingFeature => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::NOT_FOUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            status: code.status(),
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    /// 400 naming the offending query parameter.
    pub fn invalid(param: &str, message: impl std::fmt::Display) -> Self {
        ApiError::new(
            ErrorCode::InvalidParameter,
            format!("invalid parameter {param}: {message}"),
        )
        .with_detail(serde_json::json!({ "parameter": param }))
    }

    /// Logs the cause and returns a body that does not expose it.
    pub fn internal(cause: impl std::fmt::Display) -> Self {
        tracing::error!(%cause, "internal error");
        ApiError::new(ErrorCode::Internal, "internal server error")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        match &e {
            CatalogError::UnknownVideo { video_id } => {
                ApiError::new(ErrorCode::UnknownVideo, e.to_string())
                    .with_detail(serde_json::json!({ "videoId": video_id }))
            }
            CatalogError::OrdinalOutOfRange { key, available } => {
                ApiError::new(ErrorCode::OrdinalOutOfRange, e.to_string())
                    .with_detail(serde_json::json!({ "item": key, "available": available }))
            }
            _ => ApiError::internal(e),
        }
    }
}

impl From<ExploreError> for ApiError {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::InvalidCriteria { param, message } => ApiError::invalid(param, message),
            ExploreError::UnknownFeaturemap {
                ref concept,
                ref source_name,
            } => ApiError::new(ErrorCode::UnknownFeaturemap, e.to_string())
                .with_detail(serde_json::json!({ "concept": concept, "source": source_name })),
            ExploreError::MissingFeature { ref item, kind } => {
                ApiError::new(ErrorCode::MissingFeature, e.to_string())
                    .with_detail(serde_json::json!({ "item": item, "kind": kind }))
            }
            ExploreError::Som(SomError::InvalidParams(m)) => ApiError::invalid("topN", m),
            ExploreError::Som(other) => ApiError::internal(other),
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Catalog(c) => c.into(),
            SearchError::Filter(f) => f.into(),
            SearchError::InvalidArgument { param, message } => ApiError::invalid(param, message),
            SearchError::MissingFeature { ref item, kind } => {
                ApiError::new(ErrorCode::MissingFeature, e.to_string())
                    .with_detail(serde_json::json!({ "item": item, "kind": kind }))
            }
            SearchError::UnknownSource(ref s) => {
                ApiError::new(ErrorCode::UnknownSource, e.to_string())
                    .with_detail(serde_json::json!({ "source": s }))
            }
            SearchError::Mismatch(_) => ApiError::internal(e),
        }
    }
}
