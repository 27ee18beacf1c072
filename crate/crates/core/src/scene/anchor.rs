//! Resolution of anchors to world poses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::ids::{ObjectId, PlaneId, TemplateId, TrackerId};
use crate::math::{Pose, Vec3};
use crate::tracking::{CameraModel, KeypointFrame, Plane};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum Anchor {
    /// Plane-local coordinates: `origin + u*basis1 + v*basis2 + height*normal`.
    Surface { plane_id: PlaneId, u: f64, v: f64, height: f64 },
    /// World coordinates.
    Spatial { position: Vec3 },
    /// Normalized screen position (`[0,1]²`) at a z-depth in meters.
    Camera { x: f64, y: f64, depth: f64 },
    /// Offset expressed in the template's camera-aligned frame.
    Image { template_id: TemplateId, offset: Vec3 },
    /// World-space offset from the lifted blob centroid.
    Object { tracker_id: TrackerId, offset: Vec3 },
    /// Keypoint pixel plus a pixel offset, at a z-depth in meters.
    Human { keypoint_id: String, screen_offset: (f64, f64), depth: f64 },
}

impl Default for Anchor {
    fn default() -> Self {
        Anchor::Spatial { position: Vec3::ZERO }
    }
}

impl Anchor {
    pub fn is_finite(&self) -> bool {
        match self {
            Anchor::Surface { u, v, height, .. } => u.is_finite() && v.is_finite() && height.is_finite(),
            Anchor::Spatial { position } => position.is_finite(),
            Anchor::Camera { x, y, depth } => x.is_finite() && y.is_finite() && *depth > 0.0 && depth.is_finite(),
            Anchor::Image { offset, .. } | Anchor::Object { offset, .. } => offset.is_finite(),
            Anchor::Human { screen_offset, depth, .. } => {
                screen_offset.0.is_finite() && screen_offset.1.is_finite() && *depth > 0.0 && depth.is_finite()
            }
        }
    }
}

/// Located template in the current frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateObservation {
    /// Pixel center of the matched window.
    pub center: (f64, f64),
    /// Estimated z-depth: the template's reference depth divided by match scale.
    pub depth: f64,
}

/// Per-frame sources an anchor may refer to. Trackers already lifted to world.
#[derive(Debug, Clone, Copy)]
pub struct AnchorContext<'a> {
    pub camera: &'a CameraModel,
    pub planes: &'a BTreeMap<PlaneId, Plane>,
    pub tracker_results: &'a BTreeMap<TrackerId, Vec3>,
    pub template_results: &'a BTreeMap<TemplateId, TemplateObservation>,
    pub keypoints: Option<&'a KeypointFrame>,
}

pub fn resolve_anchor(anchor: &Anchor, ctx: &AnchorContext<'_>) -> Result<Pose, SceneError> {
    let cam = ctx.camera;
    match anchor {
        Anchor::Spatial { position } => Ok(Pose::from_translation(*position)),
        Anchor::Surface { plane_id, u, v, height } => {
            let plane = ctx
                .planes
                .get(plane_id)
                .ok_or_else(|| SceneError::SourceUnavailable(format!("plane {plane_id}")))?;
            Ok(Pose::new(plane.orientation(), plane.point_at(*u, *v, *height)))
        }
        Anchor::Camera { x, y, depth } => {
            let p = cam.unproject(x * cam.width as f64, y * cam.height as f64, *depth);
            Ok(Pose::new(cam.pose.rotation, p))
        }
        Anchor::Object { tracker_id, offset } => {
            let c = ctx
                .tracker_results
                .get(tracker_id)
                .ok_or_else(|| SceneError::SourceUnavailable(format!("tracker {tracker_id}")))?;
            Ok(Pose::from_translation(*c + *offset))
        }
        Anchor::Image { template_id, offset } => {
            let obs = ctx
                .template_results
                .get(template_id)
                .ok_or_else(|| SceneError::SourceUnavailable(format!("template {template_id}")))?;
            let p = cam.unproject(obs.center.0, obs.center.1, obs.depth);
            Ok(Pose::new(cam.pose.rotation, p + cam.pose.rotation.rotate(*offset)))
        }
        Anchor::Human { keypoint_id, screen_offset, depth } => {
            let kp = ctx
                .keypoints
                .and_then(|f| f.points.get(keypoint_id))
                .filter(|k| !k.out_of_frame)
                .ok_or_else(|| SceneError::SourceUnavailable(format!("keypoint {keypoint_id}")))?;
            let p = cam.unproject(kp.x + screen_offset.0, kp.y + screen_offset.1, *depth);
            Ok(Pose::new(cam.pose.rotation, p))
        }
    }
}

/// Remembers the last resolved pose per object so a lost source freezes the
/// anchor instead of snapping it.
#[derive(Debug, Clone, Default)]
pub struct AnchorResolver {
    last: BTreeMap<ObjectId, Pose>,
}

impl AnchorResolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// The anchor pose and whether it is stale. Objects never resolved fall
    /// back to the identity pose.
    pub fn resolve(&mut self, object: &ObjectId, anchor: &Anchor, ctx: &AnchorContext<'_>) -> (Pose, bool) {
        match resolve_anchor(anchor, ctx) {
            Ok(pose) => {
                self.last.insert(object.clone(), pose);
                (pose, false)
            }
            Err(_) => (self.last.get(object).copied().unwrap_or(Pose::IDENTITY), true),
        }
    }

    pub fn clear(&mut self) {
        self.last.clear();
    }
}
