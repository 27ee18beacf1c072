//! Versioned persistence of a whole project: states, sample manifest, model,
//! scene, bindings, behaviors and settings.

mod canonical;
mod store;
mod validate;

pub use canonical::{to_canonical_json, write_canonical};
pub use store::{load_bundle, load_project, read_image, save_bundle, save_project, sample_path, FrameStore};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AssetId, PlaneId, StateId, StateSetId, TemplateId, TrackerId};
use crate::scene::{AssetKind, Behavior, KeyedScene, SceneObject, Snapshot, DEFAULT_TWEEN_MS};
use crate::state_logic::{Action, StateDef, StateSet, Trigger, TriggerBinding};
use crate::teach::{ClassifierModel, HeadSpec, SmootherConfig, TeachError, TrainingSet};
use crate::tracking::{CameraModel, ColorTracker, Plane};
use crate::vision::{embed, Frame, COLOR_BLOCK_DIM, GRADIENT_BLOCK_DIM, WORKING_SIZE};

pub const PROJECT_VERSION: u32 = 1;
pub const PROJECT_FILE: &str = "project.json";
pub const DEFAULT_STATE_SET: &str = "default";

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("project version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("invalid project:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("state {0} already exists")]
    DuplicateState(StateId),
    #[error("malformed project file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("sample {path}: {message}")]
    Sample { path: String, message: String },
    #[error(transparent)]
    Teach(#[from] TeachError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssetEntry {
    pub kind: AssetKind,
    /// Opaque locator handed to the renderer.
    #[serde(default)]
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TweenDefaults {
    pub duration_ms: f64,
}

impl Default for TweenDefaults {
    fn default() -> Self {
        Self { duration_ms: DEFAULT_TWEEN_MS }
    }
}

/// A color tracker whose blob centroid is lifted onto a plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackerSetting {
    pub tracker: ColorTracker,
    pub plane_id: PlaneId,
}

/// An image target. `referenceDepth` is the z-depth at which the template
/// appears at scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateSetting {
    pub template_id: TemplateId,
    /// Image path relative to the project directory.
    pub path: String,
    pub reference_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Settings {
    pub smoother: SmootherConfig,
    pub tween_defaults: TweenDefaults,
    pub camera: CameraModel,
    pub planes: Vec<Plane>,
    pub assets: BTreeMap<AssetId, AssetEntry>,
    pub trackers: Vec<TrackerSetting>,
    pub templates: Vec<TemplateSetting>,
    pub head: HeadSpec,
    pub tick_hz: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            smoother: SmootherConfig::default(),
            tween_defaults: TweenDefaults::default(),
            camera: CameraModel::default(),
            planes: Vec::new(),
            assets: BTreeMap::new(),
            trackers: Vec::new(),
            templates: Vec::new(),
            head: HeadSpec::default(),
            tick_hz: 30.0,
        }
    }
}

impl Settings {
    pub fn plane_map(&self) -> BTreeMap<PlaneId, Plane> {
        self.planes.iter().map(|p| (p.plane_id.clone(), p.clone())).collect()
    }

    pub fn tracker(&self, id: &TrackerId) -> Option<&TrackerSetting> {
        self.trackers.iter().find(|t| &t.tracker.tracker_id == id)
    }

    pub fn template(&self, id: &TemplateId) -> Option<&TemplateSetting> {
        self.templates.iter().find(|t| &t.template_id == id)
    }
}

/// Identifies the embedding a model was trained against.
pub fn embedding_config_digest() -> String {
    use sha2::{Digest, Sha256};
    let desc = format!("embed:v1:size={WORKING_SIZE}:color={COLOR_BLOCK_DIM}:gradient={GRADIENT_BLOCK_DIM}");
    hex::encode(&Sha256::digest(desc.as_bytes())[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Project {
    pub version: u32,
    pub name: String,
    pub state_sets: Vec<StateSet>,
    /// Sample image paths per state, relative to the project directory.
    pub training_manifest: BTreeMap<StateId, Vec<String>>,
    pub embedding_config: String,
    pub model: Option<ClassifierModel>,
    pub scene_objects: Vec<SceneObject>,
    pub keyed_scenes: BTreeMap<StateId, KeyedScene>,
    pub bindings: Vec<TriggerBinding>,
    pub behaviors: Vec<Behavior>,
    pub settings: Settings,
}

impl Project {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            version: PROJECT_VERSION,
            name: name.into(),
            state_sets: Vec::new(),
            training_manifest: BTreeMap::new(),
            embedding_config: embedding_config_digest(),
            model: None,
            scene_objects: Vec::new(),
            keyed_scenes: BTreeMap::new(),
            bindings: Vec::new(),
            behaviors: Vec::new(),
            settings: Settings::default(),
        }
    }

    /// All states in declaration order across sets.
    pub fn states(&self) -> impl Iterator<Item = (&StateSet, &StateId, &str)> {
        self.state_sets.iter().flat_map(|set| set.states.iter().map(move |s| (set, &s.id, s.name.as_str())))
    }

    pub fn state_ids(&self) -> Vec<StateId> {
        self.states().map(|(_, id, _)| id.clone()).collect()
    }

    pub fn has_state(&self, id: &StateId) -> bool {
        self.states().any(|(_, s, _)| s == id)
    }

    /// Appends a state to `set` (created as a discrete set if missing).
    pub fn add_state(&mut self, set: &StateSetId, id: StateId, name: impl Into<String>) -> Result<(), ProjectError> {
        if self.has_state(&id) {
            return Err(ProjectError::DuplicateState(id));
        }
        let idx = match self.state_sets.iter().position(|s| &s.id == set) {
            Some(i) => i,
            None => {
                self.state_sets.push(StateSet::discrete(set.clone()));
                self.state_sets.len() - 1
            }
        };
        self.state_sets[idx].states.push(StateDef { id: id.clone(), name: name.into() });
        self.training_manifest.entry(id).or_default();
        Ok(())
    }

    /// Stores `snapshot` as the keyed scene of `state`, replacing any previous
    /// one, and binds entering the state to applying it unless a binding
    /// already does.
    pub fn save_keyed_scene(&mut self, state: &StateId, snapshot: Snapshot) -> Result<&KeyedScene, ProjectError> {
        if !self.has_state(state) {
            return Err(ProjectError::UnknownState(state.clone()));
        }
        let apply = Action::ApplyKeyedScene { state_id: state.clone() };
        let already_bound = self
            .bindings
            .iter()
            .any(|b| matches!(&b.trigger, Trigger::Enter { state: s } if s == state) && b.actions.contains(&apply));
        if !already_bound {
            self.bindings.push(TriggerBinding::new(Trigger::Enter { state: state.clone() }, vec![apply]));
        }
        self.keyed_scenes.insert(state.clone(), KeyedScene { state_id: state.clone(), snapshots: snapshot });
        Ok(&self.keyed_scenes[state])
    }

    /// Embeds every manifest sample, states in declaration order and samples
    /// in manifest order.
    pub fn training_set(&self, frames: &FrameStore) -> Result<TrainingSet, ProjectError> {
        let mut set = TrainingSet::new(crate::vision::EMBEDDING_DIM);
        for (_, id, name) in self.states() {
            set.add_class(id.clone(), name)?;
        }
        for (_, id, _) in self.states() {
            for path in self.training_manifest.get(id).into_iter().flatten() {
                let frame = frames
                    .get(path)
                    .ok_or_else(|| ProjectError::Sample { path: path.clone(), message: "not loaded".into() })?;
                set.add_sample(id, embed(frame).with_source(path.clone()))?;
            }
        }
        Ok(set)
    }

    /// Adds a sample to the manifest and the frame store under the canonical
    /// path for its state.
    pub fn add_sample(&mut self, state: &StateId, frame: Frame, frames: &mut FrameStore) -> Result<String, ProjectError> {
        if !self.has_state(state) {
            return Err(ProjectError::UnknownState(state.clone()));
        }
        let list = self.training_manifest.entry(state.clone()).or_default();
        let path = sample_path(state, list.len());
        list.push(path.clone());
        frames.insert(path.clone(), frame);
        Ok(path)
    }

    pub fn train(&mut self, frames: &FrameStore) -> Result<&ClassifierModel, ProjectError> {
        let set = self.training_set(frames)?;
        self.model = Some(crate::teach::train(&set, &self.settings.head)?);
        Ok(self.model.as_ref().expect("just set"))
    }

    pub fn validate(&self) -> Result<(), ProjectError> {
        validate::validate(self)
    }
}
