use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use teachable_core::pipeline::PipelineError;
use teachable_core::project::ProjectError;
use teachable_core::teach::TeachError;
use teachable_core::vision::VisionError;

/// An error response: status plus a JSON body with an `error` code.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: json!({ "error": code, "message": message.into() }) }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn no_model() -> Self {
        Self { status: StatusCode::CONFLICT, body: json!({ "error": "NoModel" }) }
    }

    pub fn code(&self) -> &str {
        self.body["error"].as_str().unwrap_or("")
    }

    fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.body[key] = value.into();
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<TeachError> for ApiError {
    fn from(e: TeachError) -> Self {
        let msg = e.to_string();
        match e {
            TeachError::EmptyClass(state) => {
                ApiError { status: StatusCode::BAD_REQUEST, body: json!({ "error": "EmptyClass", "stateId": state }) }
            }
            TeachError::UnknownState(state) => ApiError::not_found("UnknownState", msg).with("stateId", state.as_str()),
            TeachError::DimensionMismatch { .. } => ApiError::bad_request("DimensionMismatch", msg),
            TeachError::TooFewClasses(_) => ApiError::bad_request("TooFewClasses", msg),
            TeachError::NoClasses => ApiError::bad_request("NoClasses", msg),
            TeachError::NonFiniteLoss { .. } => ApiError::bad_request("NonFiniteLoss", msg),
            TeachError::InvalidHyperparameter(_) | TeachError::InvalidConfig(_) => {
                ApiError::bad_request("InvalidParameter", msg)
            }
            TeachError::DuplicateState(_) => ApiError::conflict("DuplicateState", msg),
            TeachError::EmptyCorpus => ApiError::bad_request("EmptyCorpus", msg),
            TeachError::Cancelled => ApiError::conflict("Cancelled", msg),
        }
    }
}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        let msg = e.to_string();
        match e {
            ProjectError::UnknownState(state) => ApiError::not_found("UnknownState", msg).with("stateId", state.as_str()),
            ProjectError::DuplicateState(state) => {
                ApiError::conflict("DuplicateState", msg).with("stateId", state.as_str())
            }
            ProjectError::Validation(problems) => ApiError::bad_request("ValidationError", msg).with("problems", problems),
            ProjectError::VersionMismatch { .. } => ApiError::bad_request("VersionMismatch", msg),
            ProjectError::Json(_) => ApiError::bad_request("SchemaViolation", msg),
            ProjectError::Teach(t) => t.into(),
            ProjectError::Io { .. } | ProjectError::Sample { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IoError", msg)
            }
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::NoModel => ApiError::no_model(),
            PipelineError::Teach(t) => t.into(),
            PipelineError::Project(p) => p.into(),
            PipelineError::TimeWentBackwards { .. } => ApiError::bad_request("TimestampOrder", msg),
            PipelineError::StateLogic(_) | PipelineError::Scene(_) => ApiError::bad_request("ValidationError", msg),
        }
    }
}

impl From<VisionError> for ApiError {
    fn from(e: VisionError) -> Self {
        ApiError::bad_request("BadFrame", e.to_string())
    }
}
