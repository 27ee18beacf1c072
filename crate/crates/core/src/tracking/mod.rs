//! Vision utilities behind the anchor types: pinhole camera and planes,
//! color-blob tracking, template localization, keypoint ingestion.

mod camera;
mod color;
mod keypoints;
mod template;

pub use camera::{lift_to_plane, CameraModel, Plane};
pub use color::{chroma, pick_color, track_blob, Blob, ColorTracker};
pub use keypoints::{ingest_keypoints, Keypoint, KeypointFrame};
pub use template::{default_scales, locate_template, TemplateMatch, ACCEPT_SCORE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("ray is parallel to the plane")]
    RayParallel,
    #[error("plane intersection is behind the camera")]
    BehindCamera,
    #[error("pixel ({x}, {y}) is outside the frame")]
    OutOfBounds { x: i64, y: i64 },
    #[error("template has zero luma variance")]
    FlatTemplate,
    #[error("parse error at byte {offset}: {message}")]
    ParseError { offset: usize, message: String },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid plane: {0}")]
    InvalidPlane(String),
    #[error("invalid tracker: {0}")]
    InvalidTracker(String),
}
