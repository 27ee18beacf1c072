//! Engine for prototyping tangible AR interactions by demonstration.
//!
//! A user demonstrates visual states of a physical object, the engine trains a
//! small classification head on frame embeddings, and every detected state
//! change drives a trigger-action runtime that tweens virtual objects between
//! per-state keyed scenes.
//!
//! The crate is layered bottom-up:
//!
//! - [`vision`]: frames, decoding, resizing, the handcrafted embedding.
//! - [`teach`]: training sets, knn/softmax heads, prediction, smoothing.
//! - [`state_logic`]: state sets, counters, staggered parameters, bindings.
//! - [`scene`]: scene objects, keyed scenes, tweens, behaviors, anchors.
//! - [`tracking`]: camera/plane models, color blobs, templates, keypoints.
//! - [`project`]: canonical JSON persistence of a whole project.
//! - [`pipeline`]: the live loop shared by the service and offline replay.
//! - [`corpus`]: deterministic synthetic corpora for tests and demos.

pub mod corpus;
pub mod ids;
pub mod math;
pub mod pipeline;
pub mod project;
pub mod scene;
pub mod state_logic;
pub mod teach;
pub mod tracking;
pub mod vision;

pub use ids::{
    AssetId, BehaviorId, ObjectId, PlaneId, SampleId, StateId, StateSetId, TemplateId, TrackerId,
};
pub use math::{Pose, Quat, Vec3};
pub use pipeline::{Event, EventPayload, LivePipeline};
pub use project::Project;
pub use scene::{KeyedScene, ObjectState, SceneObject, Snapshot, Transform, Tween};
pub use state_logic::{Action, StateSet, StateSetKind, TriggerBinding};
pub use teach::{ClassifierModel, Embedding, Prediction, SmootherConfig, StateEvent, TrainingSet};
pub use vision::Frame;
