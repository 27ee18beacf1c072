//! The action side of trigger-action: virtual objects, per-state keyed
//! scenes, tweened transitions, behaviors and anchor resolution.

mod anchor;
mod behavior;
mod interpolate;
mod runtime;
mod tween;

pub use anchor::{resolve_anchor, Anchor, AnchorContext, AnchorResolver, TemplateObservation};
pub use behavior::{Behavior, BehaviorRule, TargetProperty};
pub use interpolate::{interpolate, interpolate_object};
pub use runtime::{SceneRuntime, TickOutput, WorldObject, WorldTransform};
pub use tween::{smoothstep, Tween, DEFAULT_TWEEN_MS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AssetId, BehaviorId, ObjectId, StateId};
use crate::math::{Quat, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown behavior {0}")]
    UnknownBehavior(BehaviorId),
    #[error("anchor source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("invalid object state for {object}: {reason}")]
    InvalidObjectState { object: ObjectId, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transform {
    pub position: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Self { position: Vec3::ZERO, rotation: Quat::IDENTITY, scale: Vec3::ONE }
    }
}

impl Transform {
    pub fn at(position: Vec3) -> Self {
        Self { position, ..Default::default() }
    }
}

/// Per-object part of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectState {
    pub transform: Transform,
    pub visible: bool,
    pub opacity: f64,
}

impl Default for ObjectState {
    fn default() -> Self {
        Self { transform: Transform::default(), visible: true, opacity: 1.0 }
    }
}

impl ObjectState {
    pub fn visible_at(transform: Transform) -> Self {
        Self { transform, visible: true, opacity: 1.0 }
    }

    pub fn hidden() -> Self {
        Self { visible: false, ..Default::default() }
    }

    pub fn validate(&self, object: &ObjectId) -> Result<(), SceneError> {
        let bad = |reason: &str| SceneError::InvalidObjectState { object: object.clone(), reason: reason.into() };
        let t = &self.transform;
        if !(t.position.is_finite() && t.rotation.is_finite() && t.scale.is_finite()) {
            return Err(bad("non-finite transform"));
        }
        if (t.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(bad("rotation is not a unit quaternion"));
        }
        if self.visible && !(t.scale.x > 0.0 && t.scale.y > 0.0 && t.scale.z > 0.0) {
            return Err(bad("visible objects need positive scale"));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(bad("opacity outside [0,1]"));
        }
        Ok(())
    }
}

/// State of every object at one instant, keyed by object id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Snapshot(pub BTreeMap<ObjectId, ObjectState>);

impl Snapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<ObjectId>, state: ObjectState) -> Self {
        self.0.insert(id.into(), state);
        self
    }

    pub fn get(&self, id: &ObjectId) -> Option<&ObjectState> {
        self.0.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjectId, &ObjectState)> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Model3d,
    Image2d,
    Audio,
    Text2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneObject {
    pub object_id: ObjectId,
    pub asset_ref: AssetId,
    pub asset_kind: AssetKind,
    pub anchor: Anchor,
    /// Authoring-time layout, used until a keyed scene is applied.
    pub transform: Transform,
    pub visible: bool,
    pub opacity: f64,
}

impl SceneObject {
    pub fn new(object_id: impl Into<ObjectId>, asset_ref: impl Into<AssetId>, asset_kind: AssetKind, anchor: Anchor) -> Self {
        Self {
            object_id: object_id.into(),
            asset_ref: asset_ref.into(),
            asset_kind,
            anchor,
            transform: Transform::default(),
            visible: true,
            opacity: 1.0,
        }
    }

    pub fn state(&self) -> ObjectState {
        ObjectState { transform: self.transform, visible: self.visible, opacity: self.opacity }
    }
}

/// The snapshot saved for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeyedScene {
    pub state_id: StateId,
    pub snapshots: Snapshot,
}
