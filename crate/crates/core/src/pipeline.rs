//! The live loop: embed, predict, smooth, run state logic, and tick the scene
//! at a fixed synthetic rate derived from frame timestamps. The service and
//! offline replay share it, so both produce the same event log.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{AssetId, ObjectId, PlaneId, StateId, TemplateId, TrackerId};
use crate::math::Vec3;
use crate::project::{FrameStore, Project, ProjectError, TemplateSetting, TrackerSetting};
use crate::scene::{Anchor, AnchorContext, AnchorResolver, SceneRuntime, TemplateObservation, WorldObject};
use crate::state_logic::{StateLogicError, StateRuntime, StateSetKind};
use crate::teach::{ModelSlot, Smoother, TeachError};
use crate::tracking::{
    default_scales, lift_to_plane, locate_template, track_blob, CameraModel, KeypointFrame, Plane,
};
use crate::vision::{embed, Frame};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no trained model")]
    NoModel,
    #[error(transparent)]
    Teach(#[from] TeachError),
    #[error(transparent)]
    StateLogic(#[from] StateLogicError),
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("frame timestamp {found} ms is earlier than {last} ms")]
    TimeWentBackwards { last: u64, found: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum EventPayload {
    TrainStatus {
        progress: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        status: Option<String>,
    },
    Prediction {
        probs: BTreeMap<StateId, f64>,
        top: StateId,
        confidence: f64,
    },
    StateChanged {
        from: Option<StateId>,
        to: StateId,
        counter: u64,
        param: Option<f64>,
    },
    SceneSnapshot {
        objects: Vec<WorldObject>,
    },
    PlayAudio {
        asset_id: AssetId,
    },
}

/// One line of the event stream. `t` is milliseconds on the frame clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl Event {
    pub fn new(t: f64, payload: EventPayload) -> Self {
        Self { t, payload }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            EventPayload::TrainStatus { .. } => "trainStatus",
            EventPayload::Prediction { .. } => "prediction",
            EventPayload::StateChanged { .. } => "stateChanged",
            EventPayload::SceneSnapshot { .. } => "sceneSnapshot",
            EventPayload::PlayAudio { .. } => "playAudio",
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

/// Writes events as newline-delimited JSON.
pub fn write_ndjson(events: &[Event], mut out: impl Write) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{}", e.to_json_line())?;
    }
    Ok(())
}

struct TemplateSource {
    setting: TemplateSetting,
    image: Frame,
}

pub struct LivePipeline {
    model: ModelSlot,
    smoother: Smoother,
    logic: StateRuntime,
    scene: SceneRuntime,
    resolver: AnchorResolver,
    camera: CameraModel,
    planes: BTreeMap<PlaneId, Plane>,
    trackers: Vec<TrackerSetting>,
    templates: BTreeMap<TemplateId, TemplateSource>,
    tracker_results: BTreeMap<TrackerId, Vec3>,
    template_results: BTreeMap<TemplateId, TemplateObservation>,
    keypoints: Option<KeypointFrame>,
    tick_ms: f64,
    /// Frame clock value of tick 0; set by the first frame.
    origin_ms: Option<u64>,
    next_tick: u64,
    last_frame_ms: u64,
}

impl LivePipeline {
    /// Builds the runtime from a validated project. `frames` must hold the
    /// template images referenced by anchors.
    pub fn new(project: &Project, frames: &FrameStore, model: ModelSlot) -> Result<Self, PipelineError> {
        let settings = &project.settings;
        let logic = StateRuntime::new(project.state_sets.clone(), project.bindings.clone())?;
        let scene = SceneRuntime::new(
            project.scene_objects.iter().cloned(),
            project.keyed_scenes.values().cloned(),
            project.behaviors.clone(),
            settings.tween_defaults.duration_ms,
        );
        let used_trackers: Vec<&TrackerId> = project
            .scene_objects
            .iter()
            .filter_map(|o| match &o.anchor {
                Anchor::Object { tracker_id, .. } => Some(tracker_id),
                _ => None,
            })
            .collect();
        let mut templates = BTreeMap::new();
        for o in &project.scene_objects {
            if let Anchor::Image { template_id, .. } = &o.anchor {
                let Some(setting) = settings.template(template_id) else { continue };
                let image = frames.get(&setting.path).cloned().ok_or_else(|| ProjectError::Sample {
                    path: setting.path.clone(),
                    message: "template image not loaded".into(),
                })?;
                templates.insert(template_id.clone(), TemplateSource { setting: setting.clone(), image });
            }
        }
        Ok(Self {
            model,
            smoother: Smoother::new(settings.smoother)?,
            logic,
            scene,
            resolver: AnchorResolver::new(),
            camera: settings.camera.clone(),
            planes: settings.plane_map(),
            trackers: settings.trackers.iter().filter(|t| used_trackers.contains(&&t.tracker.tracker_id)).cloned().collect(),
            templates,
            tracker_results: BTreeMap::new(),
            template_results: BTreeMap::new(),
            keypoints: None,
            tick_ms: 1000.0 / settings.tick_hz,
            origin_ms: None,
            next_tick: 0,
            last_frame_ms: 0,
        })
    }

    pub fn model_slot(&self) -> &ModelSlot {
        &self.model
    }

    pub fn logic(&self) -> &StateRuntime {
        &self.logic
    }

    pub fn scene(&self) -> &SceneRuntime {
        &self.scene
    }

    pub fn stable_state(&self) -> Option<&StateId> {
        self.smoother.stable()
    }

    /// Latest keypoints for human anchors.
    pub fn push_keypoints(&mut self, frame: KeypointFrame) {
        self.keypoints = Some(frame);
    }

    /// Frame clock time of tick `k`.
    fn tick_time(&self, k: u64) -> f64 {
        self.origin_ms.unwrap_or(0) as f64 + k as f64 * self.tick_ms
    }

    /// Scene time is measured from the first frame.
    fn scene_time(&self, t_ms: u64) -> f64 {
        (t_ms - self.origin_ms.unwrap_or(t_ms)) as f64
    }

    /// Emits every tick scheduled at or before `until_ms`.
    pub fn advance_ticks(&mut self, until_ms: u64, out: &mut Vec<Event>) {
        let Some(origin) = self.origin_ms else { return };
        let until = (until_ms.max(origin) - origin) as f64;
        while self.next_tick as f64 * self.tick_ms <= until {
            let rel = self.next_tick as f64 * self.tick_ms;
            let t = self.tick_time(self.next_tick);
            let tick = self.scene.advance_to(rel, self.logic.parameters());
            for asset_id in tick.audio {
                out.push(Event::new(t, EventPayload::PlayAudio { asset_id }));
            }
            let ctx = AnchorContext {
                camera: &self.camera,
                planes: &self.planes,
                tracker_results: &self.tracker_results,
                template_results: &self.template_results,
                keypoints: self.keypoints.as_ref(),
            };
            let objects = self.scene.to_world(&tick.snapshot, &mut self.resolver, &ctx);
            out.push(Event::new(t, EventPayload::SceneSnapshot { objects }));
            self.next_tick += 1;
        }
    }

    /// Processes one frame and returns the events it caused, preceded by the
    /// scene ticks due up to its timestamp. Without a model only ticks and
    /// tracking run.
    pub fn push_frame(&mut self, frame: &Frame) -> Result<Vec<Event>, PipelineError> {
        let ts = frame.timestamp_ms;
        if self.origin_ms.is_some() && ts < self.last_frame_ms {
            return Err(PipelineError::TimeWentBackwards { last: self.last_frame_ms, found: ts });
        }
        self.origin_ms.get_or_insert(ts);
        self.last_frame_ms = ts;

        let mut out = Vec::new();
        self.update_tracking(frame);
        self.advance_ticks(ts, &mut out);

        let Some(model) = self.model.get() else { return Ok(out) };
        let pred = model.predict(&embed(frame))?.at(ts);
        let t = ts as f64;
        out.push(Event::new(
            t,
            EventPayload::Prediction {
                probs: model.classes.iter().map(|c| c.state_id.clone()).zip(pred.probabilities.iter().copied()).collect(),
                top: pred.top_state_id.clone(),
                confidence: pred.top_confidence,
            },
        ));

        if let Some(ev) = self.smoother.push(&pred) {
            let actions = self.logic.on_state_event(&ev);
            let param = self
                .logic
                .set_of(&ev.to)
                .filter(|s| s.kind == StateSetKind::Continuous)
                .and_then(|s| self.logic.parameter(&s.id));
            out.push(Event::new(
                t,
                EventPayload::StateChanged {
                    from: ev.from.clone(),
                    to: ev.to.clone(),
                    counter: self.logic.count(&ev.to),
                    param,
                },
            ));
            self.scene.execute(&actions, self.scene_time(ts))?;
            for asset_id in self.scene.take_audio() {
                out.push(Event::new(t, EventPayload::PlayAudio { asset_id }));
            }
        }
        Ok(out)
    }

    fn update_tracking(&mut self, frame: &Frame) {
        for setting in &self.trackers {
            let id = &setting.tracker.tracker_id;
            let lifted = track_blob(frame, &setting.tracker).and_then(|blob| {
                let plane = self.planes.get(&setting.plane_id)?;
                lift_to_plane(&self.camera, plane, blob.centroid).ok()
            });
            match lifted {
                Some(p) => self.tracker_results.insert(id.clone(), p),
                None => self.tracker_results.remove(id),
            };
        }
        for (id, src) in &self.templates {
            let found = locate_template(frame, &src.image, &default_scales()).ok().flatten();
            match found {
                Some(m) => self.template_results.insert(
                    id.clone(),
                    TemplateObservation { center: m.center(), depth: src.setting.reference_depth / m.scale },
                ),
                None => self.template_results.remove(id),
            };
        }
    }

    /// Stable state, smoother history, counters and scene time back to start.
    pub fn reset(&mut self) {
        self.smoother.reset();
        self.logic.reset();
        self.scene.reset();
        self.resolver.clear();
        self.tracker_results.clear();
        self.template_results.clear();
        self.origin_ms = None;
        self.next_tick = 0;
        self.last_frame_ms = 0;
    }

    pub fn object_ids(&self) -> Vec<ObjectId> {
        self.scene.objects().map(|o| o.object_id.clone()).collect()
    }
}

/// Runs `frames` through a fresh pipeline in order and returns the full log.
pub fn replay(project: &Project, assets: &FrameStore, frames: impl IntoIterator<Item = Frame>) -> Result<Vec<Event>, PipelineError> {
    let slot = ModelSlot::default();
    slot.swap(project.model.clone().ok_or(PipelineError::NoModel)?);
    let mut pipeline = LivePipeline::new(project, assets, slot)?;
    let mut events = Vec::new();
    for frame in frames {
        events.extend(pipeline.push_frame(&frame)?);
    }
    Ok(events)
}
