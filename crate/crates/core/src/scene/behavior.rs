use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ObjectState;
use crate::ids::{BehaviorId, ObjectId, StateSetId};
use crate::math::{Quat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum TargetProperty {
    /// Overrides scale with `(v, v, v)`.
    ScaleUniform,
    /// Overrides opacity, clamped to `[0, 1]`.
    Opacity,
    /// Composes a rotation of `v` radians before the base rotation.
    RotationAboutAxis { axis: Vec3 },
    /// Offsets the position by `v` meters along the unit axis.
    PositionAlongAxis { axis: Vec3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum BehaviorRule {
    /// Meters per second in the anchor frame.
    LinearVelocity { velocity: Vec3 },
    /// Radians per second about `axis`.
    AngularVelocity { axis: Vec3, rate: f64 },
    /// `a * p + b` where `p` is the current value of `parameter`.
    ParamBinding { parameter: StateSetId, target: TargetProperty, a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Behavior {
    pub behavior_id: BehaviorId,
    pub object_id: ObjectId,
    pub rule: BehaviorRule,
    pub active: bool,
}

impl Behavior {
    pub fn new(behavior_id: impl Into<BehaviorId>, object_id: impl Into<ObjectId>, rule: BehaviorRule) -> Self {
        Self { behavior_id: behavior_id.into(), object_id: object_id.into(), rule, active: true }
    }

    pub fn is_finite(&self) -> bool {
        match &self.rule {
            BehaviorRule::LinearVelocity { velocity } => velocity.is_finite(),
            BehaviorRule::AngularVelocity { axis, rate } => axis.normalized().is_some() && rate.is_finite(),
            BehaviorRule::ParamBinding { target, a, b, .. } => {
                a.is_finite()
                    && b.is_finite()
                    && match target {
                        TargetProperty::RotationAboutAxis { axis } | TargetProperty::PositionAlongAxis { axis } => {
                            axis.normalized().is_some()
                        }
                        _ => true,
                    }
            }
        }
    }

    /// Applies the rule to `state`. `elapsed_s` is the total time this
    /// behavior has been active; integrating from the total keeps split steps
    /// identical to one long step.
    pub(crate) fn apply(&self, state: &mut ObjectState, elapsed_s: f64, params: &BTreeMap<StateSetId, f64>) {
        let t = &mut state.transform;
        match &self.rule {
            BehaviorRule::LinearVelocity { velocity } => t.position += *velocity * elapsed_s,
            BehaviorRule::AngularVelocity { axis, rate } => {
                t.rotation = (Quat::from_axis_angle(*axis, rate * elapsed_s) * t.rotation).normalized();
            }
            BehaviorRule::ParamBinding { parameter, target, a, b } => {
                let Some(p) = params.get(parameter) else { return };
                let v = a * p + b;
                match target {
                    TargetProperty::ScaleUniform => {
                        t.scale = Vec3::splat(v.max(0.0));
                        if v <= 0.0 {
                            state.visible = false;
                        }
                    }
                    TargetProperty::Opacity => state.opacity = v.clamp(0.0, 1.0),
                    TargetProperty::RotationAboutAxis { axis } => {
                        t.rotation = (Quat::from_axis_angle(*axis, v) * t.rotation).normalized();
                    }
                    TargetProperty::PositionAlongAxis { axis } => {
                        let dir = axis.normalized().unwrap_or(Vec3::ZERO);
                        t.position += dir * v;
                    }
                }
            }
        }
    }
}
