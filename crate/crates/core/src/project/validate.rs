use std::collections::BTreeSet;

use super::{embedding_config_digest, Project, ProjectError, PROJECT_VERSION};
use crate::ids::{ObjectId, StateId};
use crate::scene::{Anchor, BehaviorRule};
use crate::state_logic::{Action, StateSetKind};

/// Collects every broken invariant rather than stopping at the first.
pub(super) fn validate(p: &Project) -> Result<(), ProjectError> {
    if p.version != PROJECT_VERSION {
        return Err(ProjectError::VersionMismatch { found: p.version as u64, expected: PROJECT_VERSION });
    }
    let mut errs: Vec<String> = Vec::new();

    let mut states: BTreeSet<&StateId> = BTreeSet::new();
    let mut set_ids = BTreeSet::new();
    for set in &p.state_sets {
        if !set_ids.insert(&set.id) {
            errs.push(format!("duplicate state set {}", set.id));
        }
        if let Err(e) = set.validate() {
            errs.push(e.to_string());
        }
        for s in &set.states {
            if !states.insert(&s.id) {
                errs.push(format!("state {} declared more than once", s.id));
            }
        }
    }
    let state_ok = |s: &StateId| states.contains(s);

    for (state, paths) in &p.training_manifest {
        if !state_ok(state) {
            errs.push(format!("training manifest lists unknown state {state}"));
        }
        let mut seen = BTreeSet::new();
        for path in paths {
            if !seen.insert(path) {
                errs.push(format!("sample {path} listed twice"));
            }
        }
    }

    if p.embedding_config != embedding_config_digest() {
        errs.push(format!("embedding config {} does not match this engine", p.embedding_config));
    }
    if let Some(model) = &p.model {
        for c in &model.classes {
            if !state_ok(&c.state_id) {
                errs.push(format!("model class {} is not a project state", c.state_id));
            }
        }
    }

    let settings = &p.settings;
    if let Err(e) = settings.smoother.validate() {
        errs.push(e.to_string());
    }
    if !(settings.tween_defaults.duration_ms > 0.0 && settings.tween_defaults.duration_ms.is_finite()) {
        errs.push("tween duration must be positive".into());
    }
    if !(settings.tick_hz > 0.0 && settings.tick_hz.is_finite()) {
        errs.push("tick rate must be positive".into());
    }
    if let Err(e) = settings.camera.validate() {
        errs.push(format!("camera: {e}"));
    }
    let mut planes = BTreeSet::new();
    for plane in &settings.planes {
        if !planes.insert(&plane.plane_id) {
            errs.push(format!("duplicate plane {}", plane.plane_id));
        }
        if let Err(e) = plane.validate() {
            errs.push(format!("plane {}: {e}", plane.plane_id));
        }
    }
    for t in &settings.trackers {
        if let Err(e) = t.tracker.validate() {
            errs.push(e.to_string());
        }
        if !planes.contains(&t.plane_id) {
            errs.push(format!("tracker {} lifts onto unknown plane {}", t.tracker.tracker_id, t.plane_id));
        }
    }
    for t in &settings.templates {
        if !(t.reference_depth > 0.0 && t.reference_depth.is_finite()) {
            errs.push(format!("template {} needs a positive reference depth", t.template_id));
        }
    }

    let mut objects: BTreeSet<&ObjectId> = BTreeSet::new();
    for o in &p.scene_objects {
        if !objects.insert(&o.object_id) {
            errs.push(format!("duplicate object {}", o.object_id));
        }
        if !settings.assets.contains_key(&o.asset_ref) {
            errs.push(format!("object {} references unknown asset {}", o.object_id, o.asset_ref));
        }
        if let Err(e) = o.state().validate(&o.object_id) {
            errs.push(e.to_string());
        }
        if !o.anchor.is_finite() {
            errs.push(format!("object {} has a non-finite anchor", o.object_id));
        }
        match &o.anchor {
            Anchor::Surface { plane_id, .. } if !planes.contains(plane_id) => {
                errs.push(format!("object {} anchors to unknown plane {plane_id}", o.object_id))
            }
            Anchor::Object { tracker_id, .. } if settings.tracker(tracker_id).is_none() => {
                errs.push(format!("object {} anchors to unknown tracker {tracker_id}", o.object_id))
            }
            Anchor::Image { template_id, .. } if settings.template(template_id).is_none() => {
                errs.push(format!("object {} anchors to unknown template {template_id}", o.object_id))
            }
            _ => {}
        }
    }

    for (state, scene) in &p.keyed_scenes {
        if &scene.state_id != state {
            errs.push(format!("keyed scene stored under {state} belongs to {}", scene.state_id));
        }
        if !state_ok(state) {
            errs.push(format!("keyed scene for unknown state {state}"));
        }
        for (id, s) in scene.snapshots.iter() {
            if !objects.contains(id) {
                errs.push(format!("keyed scene {state} references unknown object {id}"));
            }
            if let Err(e) = s.validate(id) {
                errs.push(format!("keyed scene {state}: {e}"));
            }
        }
    }

    let behaviors: BTreeSet<_> = p.behaviors.iter().map(|b| &b.behavior_id).collect();
    if behaviors.len() != p.behaviors.len() {
        errs.push("duplicate behavior id".into());
    }
    for b in &p.behaviors {
        if !objects.contains(&b.object_id) {
            errs.push(format!("behavior {} drives unknown object {}", b.behavior_id, b.object_id));
        }
        if !b.is_finite() {
            errs.push(format!("behavior {} has non-finite or degenerate values", b.behavior_id));
        }
        if let BehaviorRule::ParamBinding { parameter, .. } = &b.rule {
            if !p.state_sets.iter().any(|s| &s.id == parameter && s.kind == StateSetKind::Continuous) {
                errs.push(format!("behavior {} binds to unknown continuous set {parameter}", b.behavior_id));
            }
        }
    }

    for (i, binding) in p.bindings.iter().enumerate() {
        for s in binding.referenced_states() {
            if !state_ok(s) {
                errs.push(format!("binding {i} references unknown state {s}"));
            }
        }
        for action in &binding.actions {
            match action {
                Action::PlayAudio { asset_id } if !settings.assets.contains_key(asset_id) => {
                    errs.push(format!("binding {i} plays unknown asset {asset_id}"))
                }
                Action::RunBehavior { behavior_id, .. } if !behaviors.contains(behavior_id) => {
                    errs.push(format!("binding {i} runs unknown behavior {behavior_id}"))
                }
                Action::SetParameter { parameter, value } => {
                    if !p.state_sets.iter().any(|s| &s.id == parameter && s.kind == StateSetKind::Continuous) {
                        errs.push(format!("binding {i} sets unknown continuous set {parameter}"));
                    }
                    if !value.is_finite() {
                        errs.push(format!("binding {i} sets a non-finite value"));
                    }
                }
                _ => {}
            }
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(ProjectError::Validation(errs))
    }
}
