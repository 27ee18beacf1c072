use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    AnchorContext, AnchorResolver, Behavior, BehaviorRule, KeyedScene, SceneError, SceneObject, Snapshot, Tween, DEFAULT_TWEEN_MS,
};
use crate::ids::{AssetId, BehaviorId, ObjectId, StateId, StateSetId};
use crate::math::{Quat, Vec3};
use crate::state_logic::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldTransform {
    pub position: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldObject {
    pub id: ObjectId,
    pub world_transform: WorldTransform,
    pub visible: bool,
    pub opacity: f64,
    /// The anchor source was unavailable; the last known pose is used.
    #[serde(default)]
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub now_ms: f64,
    /// Object states in their anchor frames, after tween and behaviors.
    pub snapshot: Snapshot,
    /// Audio triggered since the previous tick, in trigger order.
    pub audio: Vec<AssetId>,
}

/// Live scene state driven by state-logic actions and ticks.
#[derive(Debug, Clone)]
pub struct SceneRuntime {
    objects: BTreeMap<ObjectId, SceneObject>,
    keyed: BTreeMap<StateId, KeyedScene>,
    behaviors: Vec<Behavior>,
    /// Accumulated active time per behavior.
    elapsed_ms: BTreeMap<BehaviorId, f64>,
    settled: Snapshot,
    tween: Option<Tween>,
    tween_ms: f64,
    now_ms: f64,
    pending_audio: Vec<AssetId>,
}

impl SceneRuntime {
    pub fn new(
        objects: impl IntoIterator<Item = SceneObject>,
        keyed: impl IntoIterator<Item = KeyedScene>,
        behaviors: Vec<Behavior>,
        tween_ms: f64,
    ) -> Self {
        let objects: BTreeMap<_, _> = objects.into_iter().map(|o| (o.object_id.clone(), o)).collect();
        let settled = Snapshot(objects.iter().map(|(id, o)| (id.clone(), o.state())).collect());
        Self {
            objects,
            keyed: keyed.into_iter().map(|k| (k.state_id.clone(), k)).collect(),
            elapsed_ms: behaviors.iter().map(|b| (b.behavior_id.clone(), 0.0)).collect(),
            behaviors,
            settled,
            tween: None,
            tween_ms: if tween_ms > 0.0 { tween_ms } else { DEFAULT_TWEEN_MS },
            now_ms: 0.0,
            pending_audio: Vec::new(),
        }
    }

    pub fn now_ms(&self) -> f64 {
        self.now_ms
    }

    pub fn active_tween(&self) -> Option<&Tween> {
        self.tween.as_ref()
    }

    pub fn objects(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.values()
    }

    pub fn keyed_scene(&self, state: &StateId) -> Option<&KeyedScene> {
        self.keyed.get(state)
    }

    pub fn set_keyed_scene(&mut self, scene: KeyedScene) {
        self.keyed.insert(scene.state_id.clone(), scene);
    }

    /// Tweened snapshot at the current time, before behaviors.
    pub fn base_snapshot(&self) -> Snapshot {
        match &self.tween {
            Some(t) => t.evaluate(self.now_ms),
            None => self.settled.clone(),
        }
    }

    /// Starts a tween from the live base snapshot to the target's keyed scene.
    /// Targets without a keyed scene leave the scene untouched.
    pub fn apply_transition(&mut self, target: &StateId, now_ms: f64) -> Option<&Tween> {
        let to = self.keyed.get(target)?.snapshots.clone();
        self.now_ms = self.now_ms.max(now_ms);
        let from = self.base_snapshot();
        self.tween = Some(Tween::new(from, to, self.tween_ms, self.now_ms));
        self.tween.as_ref()
    }

    /// Runs scene-side actions. Parameter actions belong to state logic and are
    /// ignored here.
    pub fn execute(&mut self, actions: &[Action], now_ms: f64) -> Result<(), SceneError> {
        for action in actions {
            match action {
                Action::ApplyKeyedScene { state_id } => {
                    self.apply_transition(state_id, now_ms);
                }
                Action::PlayAudio { asset_id } => self.pending_audio.push(asset_id.clone()),
                Action::RunBehavior { behavior_id, on } => {
                    let b = self
                        .behaviors
                        .iter_mut()
                        .find(|b| &b.behavior_id == behavior_id)
                        .ok_or_else(|| SceneError::UnknownBehavior(behavior_id.clone()))?;
                    b.active = *on;
                }
                Action::SetParameter { .. } => {}
            }
        }
        Ok(())
    }

    /// Advances time by `dt_ms` and produces the live snapshot.
    pub fn tick(&mut self, dt_ms: f64, params: &BTreeMap<StateSetId, f64>) -> TickOutput {
        debug_assert!(dt_ms > 0.0);
        self.now_ms += dt_ms;
        for b in &self.behaviors {
            if b.active {
                *self.elapsed_ms.entry(b.behavior_id.clone()).or_default() += dt_ms;
            }
        }
        if let Some(t) = &self.tween {
            if t.is_finished(self.now_ms) {
                self.settled = t.to.clone();
                self.tween = None;
            }
        }
        TickOutput {
            now_ms: self.now_ms,
            snapshot: self.live_snapshot(params),
            audio: self.take_audio(),
        }
    }

    /// Ticks forward to `t_ms`; a time at or before `now` only re-samples.
    pub fn advance_to(&mut self, t_ms: f64, params: &BTreeMap<StateSetId, f64>) -> TickOutput {
        if t_ms > self.now_ms {
            self.tick(t_ms - self.now_ms, params)
        } else {
            TickOutput { now_ms: self.now_ms, snapshot: self.live_snapshot(params), audio: self.take_audio() }
        }
    }

    /// Audio triggered since the last drain.
    pub fn take_audio(&mut self) -> Vec<AssetId> {
        std::mem::take(&mut self.pending_audio)
    }

    /// Base snapshot with every behavior applied in declaration order.
    pub fn live_snapshot(&self, params: &BTreeMap<StateSetId, f64>) -> Snapshot {
        let mut snap = self.base_snapshot();
        for b in &self.behaviors {
            let elapsed_s = self.elapsed_ms.get(&b.behavior_id).copied().unwrap_or(0.0) / 1000.0;
            // paused motion keeps its accumulated displacement; bindings only act while active
            if !b.active && matches!(b.rule, BehaviorRule::ParamBinding { .. }) {
                continue;
            }
            if let Some(state) = snap.0.get_mut(&b.object_id) {
                b.apply(state, elapsed_s, params);
            }
        }
        snap
    }

    /// Places the objects of `local` in the world through their anchors.
    pub fn to_world(&self, local: &Snapshot, resolver: &mut AnchorResolver, ctx: &AnchorContext<'_>) -> Vec<WorldObject> {
        local
            .iter()
            .filter_map(|(id, s)| {
                let obj = self.objects.get(id)?;
                let (pose, stale) = resolver.resolve(id, &obj.anchor, ctx);
                Some(WorldObject {
                    id: id.clone(),
                    world_transform: WorldTransform {
                        position: pose.transform_point(s.transform.position),
                        rotation: (pose.rotation * s.transform.rotation).normalized(),
                        scale: s.transform.scale,
                    },
                    visible: s.visible,
                    opacity: s.opacity,
                    stale,
                })
            })
            .collect()
    }

    pub fn reset(&mut self) {
        self.settled = Snapshot(self.objects.iter().map(|(id, o)| (id.clone(), o.state())).collect());
        self.tween = None;
        self.now_ms = 0.0;
        self.pending_audio.clear();
        self.elapsed_ms.values_mut().for_each(|v| *v = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Anchor, AssetKind, ObjectState, TargetProperty, Transform};

    fn runtime(behaviors: Vec<Behavior>) -> SceneRuntime {
        let obj = SceneObject::new("car", "car.glb", AssetKind::Model3d, Anchor::default());
        let near = KeyedScene { state_id: "near".into(), snapshots: Snapshot::new().with("car", ObjectState::default()) };
        let far = KeyedScene {
            state_id: "far".into(),
            snapshots: Snapshot::new().with("car", ObjectState::visible_at(Transform::at(Vec3::new(2.0, 0.0, 0.0)))),
        };
        SceneRuntime::new([obj], [near, far], behaviors, 500.0)
    }

    fn car(out: &TickOutput) -> ObjectState {
        *out.snapshot.get(&"car".into()).unwrap()
    }

    #[test]
    fn linear_velocity_euler_step() {
        let b = Behavior::new("drive", "car", BehaviorRule::LinearVelocity { velocity: Vec3::new(0.5, 0.0, 0.0) });
        let mut rt = runtime(vec![b]);
        let out = rt.tick(100.0, &BTreeMap::new());
        assert!((car(&out).transform.position.x - 0.05).abs() < 1e-15);
    }

    #[test]
    fn angular_velocity_quarter_turn() {
        let b = Behavior::new("spin", "car", BehaviorRule::AngularVelocity { axis: Vec3::Z, rate: std::f64::consts::PI });
        let mut rt = runtime(vec![b]);
        let out = rt.tick(500.0, &BTreeMap::new());
        let want = Quat::from_axis_angle(Vec3::Z, std::f64::consts::FRAC_PI_2);
        assert!(Quat::angle_between(car(&out).transform.rotation, want) < 1e-12);
    }

    #[test]
    fn param_binding_scale() {
        let rule = BehaviorRule::ParamBinding { parameter: "slider".into(), target: TargetProperty::ScaleUniform, a: 2.0, b: 0.0 };
        let mut rt = runtime(vec![Behavior::new("grow", "car", rule)]);
        let params = BTreeMap::from([(StateSetId::new("slider"), 0.4)]);
        assert_eq!(car(&rt.tick(10.0, &params)).transform.scale, Vec3::splat(0.8));
    }

    #[test]
    fn split_ticks_match_single_tick() {
        let rules = [
            BehaviorRule::LinearVelocity { velocity: Vec3::new(0.3, -0.7, 1.1) },
            BehaviorRule::AngularVelocity { axis: Vec3::new(1.0, 2.0, 0.5), rate: 1.3 },
        ];
        for rule in rules {
            let mut one = runtime(vec![Behavior::new("b", "car", rule.clone())]);
            let mut two = runtime(vec![Behavior::new("b", "car", rule)]);
            let a = car(&one.tick(100.0, &BTreeMap::new()));
            two.tick(50.0, &BTreeMap::new());
            let b = car(&two.tick(50.0, &BTreeMap::new()));
            assert_eq!(a.transform.position, b.transform.position);
            assert!(Quat::angle_between(a.transform.rotation, b.transform.rotation) < 1e-9);
        }
    }

    #[test]
    fn tween_replacement_is_continuous() {
        let mut rt = runtime(vec![]);
        let none = BTreeMap::new();
        rt.apply_transition(&"far".into(), 0.0);
        rt.tick(200.0, &none);
        let before = rt.base_snapshot();
        rt.apply_transition(&"near".into(), 200.0);
        assert_eq!(rt.base_snapshot(), before);
        let mid = rt.active_tween().unwrap().evaluate(200.0);
        assert_eq!(mid, before);
    }

    #[test]
    fn missing_keyed_scene_is_noop() {
        let mut rt = runtime(vec![]);
        assert!(rt.apply_transition(&"unsaved".into(), 0.0).is_none());
        assert!(rt.active_tween().is_none());
    }

    #[test]
    fn audio_emitted_once() {
        let mut rt = runtime(vec![]);
        rt.execute(&[Action::PlayAudio { asset_id: "ding".into() }], 0.0).unwrap();
        assert_eq!(rt.tick(33.0, &BTreeMap::new()).audio, vec![AssetId::new("ding")]);
        assert!(rt.tick(33.0, &BTreeMap::new()).audio.is_empty());
    }

    #[test]
    fn tween_settles_on_target() {
        let mut rt = runtime(vec![]);
        rt.apply_transition(&"far".into(), 0.0);
        let out = rt.tick(600.0, &BTreeMap::new());
        assert_eq!(car(&out).transform.position, Vec3::new(2.0, 0.0, 0.0));
        assert!(rt.active_tween().is_none());
    }
}
