//! Session state and every mutating operation. The HTTP layer holds one
//! session behind a single async mutex, so all writes are serialized.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use teachable_core::ids::{AssetId, StateId, StateSetId};
use teachable_core::pipeline::{Event, LivePipeline};
use teachable_core::project::{AssetEntry, FrameStore, Project};
use teachable_core::scene::{SceneObject, Snapshot};
use teachable_core::state_logic::{StateSet, StateSetKind};
use teachable_core::teach::{HeadSpec, ModelSlot, Prediction, TrainingJob, TrainingProgress};
use teachable_core::vision::{embed, Frame};

use crate::error::ApiError;
use crate::events::EventFeed;

/// Samples per second kept while capturing.
pub const CAPTURE_FPS: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Mode {
    Capture { state_id: StateId },
    Author,
    Test,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NewState {
    pub state_id: StateId,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub state_set: Option<StateSetId>,
    /// Only used when the set does not exist yet.
    #[serde(default)]
    pub kind: Option<StateSetKind>,
    #[serde(default)]
    pub param_start: Option<f64>,
    #[serde(default)]
    pub param_end: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainStatus {
    pub running: bool,
    pub progress: f64,
    pub started_ms: Option<u64>,
    pub has_model: bool,
    pub head: Option<&'static str>,
    pub error: Option<String>,
}

struct RunningJob {
    job: TrainingJob,
    started_ms: u64,
}

/// Result of pushing a frame.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameOutcome {
    pub events: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub captured: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_state: Option<StateId>,
}

pub struct Session {
    pub id: String,
    project: Project,
    frames: FrameStore,
    mode: Mode,
    slot: ModelSlot,
    job: Option<RunningJob>,
    last_train_error: Option<String>,
    pipeline: Option<LivePipeline>,
    /// First captured frame time and the last 15 fps slot sampled.
    capture_clock: Option<(u64, u64)>,
    feed: EventFeed,
    clock: Instant,
}

impl Session {
    pub fn new(id: impl Into<String>, feed: EventFeed) -> Self {
        Self {
            id: id.into(),
            project: Project::new("untitled"),
            frames: FrameStore::new(),
            mode: Mode::Author,
            slot: ModelSlot::default(),
            job: None,
            last_train_error: None,
            pipeline: None,
            capture_clock: None,
            feed,
            clock: Instant::now(),
        }
    }

    pub fn feed(&self) -> &EventFeed {
        &self.feed
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn project(&mut self) -> &Project {
        self.harvest();
        &self.project
    }

    pub fn frames(&self) -> &FrameStore {
        &self.frames
    }

    fn now_ms(&self) -> u64 {
        self.clock.elapsed().as_millis() as u64
    }

    fn require_idle(&self) -> Result<(), ApiError> {
        if self.job.is_some() {
            return Err(ApiError::conflict("TrainingInProgress", "a training job is running"));
        }
        Ok(())
    }

    /// Starts over with an empty project.
    pub fn create_project(&mut self, name: &str) -> Result<&Project, ApiError> {
        self.harvest();
        self.require_idle()?;
        self.leave_mode();
        self.project = Project::new(name);
        self.frames.clear();
        self.slot.clear();
        self.last_train_error = None;
        Ok(&self.project)
    }

    /// Replaces the project wholesale after validation. Sample images already
    /// captured stay available under their paths.
    pub fn replace_project(&mut self, project: Project) -> Result<&Project, ApiError> {
        self.harvest();
        self.require_idle()?;
        project.validate()?;
        self.leave_mode();
        match &project.model {
            Some(m) => {
                self.slot.swap(m.clone());
            }
            None => self.slot.clear(),
        }
        self.project = project;
        Ok(&self.project)
    }

    pub fn add_state(&mut self, req: NewState) -> Result<usize, ApiError> {
        self.harvest();
        self.require_idle()?;
        let set_id = req.state_set.unwrap_or_else(|| StateSetId::new(teachable_core::project::DEFAULT_STATE_SET));
        if !self.project.state_sets.iter().any(|s| s.id == set_id) {
            let set = match req.kind.unwrap_or(StateSetKind::Discrete) {
                StateSetKind::Discrete => StateSet::discrete(set_id.clone()),
                StateSetKind::Continuous => {
                    StateSet::continuous(set_id.clone(), req.param_start.unwrap_or(0.0), req.param_end.unwrap_or(1.0))
                }
            };
            self.project.state_sets.push(set);
        }
        let name = if req.name.is_empty() { req.state_id.to_string() } else { req.name };
        self.project.add_state(&set_id, req.state_id.clone(), name)?;
        Ok(self.project.state_ids().iter().position(|s| s == &req.state_id).expect("just added"))
    }

    pub fn add_sample(&mut self, state: &StateId, frame: Frame) -> Result<(String, usize), ApiError> {
        self.harvest();
        let path = self.project.add_sample(state, frame, &mut self.frames)?;
        Ok((path, self.project.training_manifest[state].len()))
    }

    pub fn add_asset(&mut self, id: AssetId, entry: AssetEntry) {
        self.project.settings.assets.insert(id, entry);
    }

    /// Adds or replaces a scene object; its asset is registered if unknown.
    pub fn put_object(&mut self, object: SceneObject) -> Result<(), ApiError> {
        let mut next = self.project.clone();
        next.settings
            .assets
            .entry(object.asset_ref.clone())
            .or_insert(AssetEntry { kind: object.asset_kind, uri: String::new() });
        match next.scene_objects.iter_mut().find(|o| o.object_id == object.object_id) {
            Some(slot) => *slot = object,
            None => next.scene_objects.push(object),
        }
        next.validate()?;
        self.project = next;
        Ok(())
    }

    /// Validates the training set synchronously, then trains on a worker.
    /// `on_done` runs on the worker after the model is swapped in.
    pub fn start_training(
        &mut self,
        spec: Option<HeadSpec>,
        on_done: impl FnOnce(bool) + Send + 'static,
    ) -> Result<TrainingProgress, ApiError> {
        self.harvest();
        self.require_idle()?;
        let set = self.project.training_set(&self.frames)?;
        set.check_trainable()?;
        let spec = spec.unwrap_or_else(|| self.project.settings.head.clone());
        if matches!(spec, HeadSpec::Softmax(_)) && set.classes().len() < 2 {
            return Err(teachable_core::teach::TeachError::TooFewClasses(set.classes().len()).into());
        }
        self.project.settings.head = spec.clone();
        let slot = self.slot.clone();
        let job = TrainingJob::spawn(set, spec, move |result| {
            if let Ok(model) = result {
                slot.swap(model.clone());
            }
            on_done(result.is_ok());
        });
        let progress = job.progress_handle();
        self.last_train_error = None;
        self.job = Some(RunningJob { job, started_ms: self.now_ms() });
        Ok(progress)
    }

    /// Folds a finished job's outcome into the project.
    pub fn harvest(&mut self) {
        if !self.job.as_ref().is_some_and(|j| j.job.is_finished()) {
            return;
        }
        let running = self.job.take().expect("checked above");
        match running.job.join() {
            Ok(model) => self.project.model = Some(model),
            Err(e) => self.last_train_error = Some(e.to_string()),
        }
    }

    pub fn train_status(&mut self) -> TrainStatus {
        self.harvest();
        let model = self.slot.get();
        TrainStatus {
            running: self.job.is_some(),
            progress: match &self.job {
                Some(j) => j.job.progress(),
                None if model.is_some() => 1.0,
                None => 0.0,
            },
            started_ms: self.job.as_ref().map(|j| j.started_ms),
            has_model: model.is_some(),
            head: model.map(|m| m.head_kind()),
            error: self.last_train_error.clone(),
        }
    }

    pub fn classify(&self, frame: &Frame) -> Result<Prediction, ApiError> {
        let model = self.slot.get().ok_or_else(ApiError::no_model)?;
        Ok(model.predict(&embed(frame))?.at(frame.timestamp_ms))
    }

    pub fn save_scene(&mut self, state: &StateId, snapshot: Snapshot) -> Result<(), ApiError> {
        self.harvest();
        let mut next = self.project.clone();
        next.save_keyed_scene(state, snapshot)?;
        next.validate()?;
        self.project = next;
        Ok(())
    }

    fn leave_mode(&mut self) {
        if self.mode != Mode::Author {
            self.feed.close_streams();
        }
        self.mode = Mode::Author;
        self.pipeline = None;
        self.capture_clock = None;
    }

    pub fn set_mode(&mut self, mode: Mode) -> Result<(), ApiError> {
        self.harvest();
        match &mode {
            Mode::Capture { state_id } if !self.project.has_state(state_id) => {
                return Err(ApiError::not_found("UnknownState", format!("unknown state {state_id}")))
            }
            Mode::Test if self.slot.get().is_none() => return Err(ApiError::no_model()),
            _ => {}
        }
        let pipeline = match mode {
            Mode::Test => Some(LivePipeline::new(&self.project, &self.frames, self.slot.clone())?),
            _ => None,
        };
        self.leave_mode();
        self.mode = mode;
        self.pipeline = pipeline;
        Ok(())
    }

    /// Live input: classified in test mode, sampled at the capture rate in
    /// capture mode.
    pub fn push_frame(&mut self, frame: Frame) -> Result<FrameOutcome, ApiError> {
        self.harvest();
        match self.mode.clone() {
            Mode::Author => Err(ApiError::conflict("WrongMode", "frames are accepted in capture or test mode")),
            Mode::Capture { state_id } => {
                let ts = frame.timestamp_ms;
                let period = 1000.0 / CAPTURE_FPS;
                let slot_of = |origin: u64| (ts.saturating_sub(origin) as f64 / period).floor() as u64;
                let due = match self.capture_clock {
                    None => Some((ts, 0)),
                    Some((origin, last)) if ts >= origin && slot_of(origin) > last => Some((origin, slot_of(origin))),
                    Some(_) => None,
                };
                let mut captured = None;
                if let Some(clock) = due {
                    let (path, _) = self.add_sample(&state_id, frame)?;
                    self.capture_clock = Some(clock);
                    captured = Some(path);
                }
                Ok(FrameOutcome { events: 0, captured, stable_state: None })
            }
            Mode::Test => {
                let pipeline = self.pipeline.as_mut().expect("test mode has a pipeline");
                let events: Vec<Event> = pipeline.push_frame(&frame)?;
                let stable_state = pipeline.stable_state().cloned();
                let n = events.len();
                for e in events {
                    self.feed.publish(e);
                }
                Ok(FrameOutcome { events: n, captured: None, stable_state })
            }
        }
    }
}
