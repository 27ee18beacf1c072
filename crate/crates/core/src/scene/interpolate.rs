use super::{ObjectState, Snapshot, Transform};
use crate::math::{Quat, Vec3};

/// Blends two object states. `None` stands for an invisible entry.
pub fn interpolate_object(from: Option<&ObjectState>, to: Option<&ObjectState>, t: f64) -> Option<ObjectState> {
    let t = t.clamp(0.0, 1.0);
    let from_on = from.is_some_and(|s| s.visible);
    let to_on = to.is_some_and(|s| s.visible);
    match (from, to) {
        (None, None) => None,
        _ if t == 0.0 && from.is_some() => from.copied(),
        _ if t == 1.0 && to.is_some() => to.copied(),
        (Some(a), Some(b)) if from_on && to_on => Some(ObjectState {
            transform: Transform {
                position: Vec3::lerp(a.transform.position, b.transform.position, t),
                rotation: Quat::slerp(a.transform.rotation, b.transform.rotation, t),
                scale: Vec3::lerp(a.transform.scale, b.transform.scale, t),
            },
            visible: true,
            opacity: a.opacity + (b.opacity - a.opacity) * t,
        }),
        _ if to_on => Some(ramp(to.expect("visible implies present"), t)),
        _ if from_on => Some(ramp(from.expect("visible implies present"), 1.0 - t)),
        // invisible at both ends
        _ => to.or(from).copied().map(|s| ObjectState { visible: false, ..s }),
    }
}

/// `target` shrunk towards zero scale and opacity; invisible at `k = 0`.
fn ramp(target: &ObjectState, k: f64) -> ObjectState {
    let mut s = *target;
    s.transform.scale = target.transform.scale * k;
    s.opacity = target.opacity * k;
    s.visible = k > 0.0;
    s
}

/// Per-object blend over the union of both snapshots' objects.
pub fn interpolate(from: &Snapshot, to: &Snapshot, t: f64) -> Snapshot {
    let mut out = Snapshot::new();
    for id in from.0.keys().chain(to.0.keys()) {
        if out.0.contains_key(id) {
            continue;
        }
        if let Some(s) = interpolate_object(from.get(id), to.get(id), t) {
            out.0.insert(id.clone(), s);
        }
    }
    out
}
