use serde::{Deserialize, Serialize};

use super::{interpolate, Snapshot};

pub const DEFAULT_TWEEN_MS: f64 = 500.0;

/// `3s² - 2s³` on `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tween {
    pub from: Snapshot,
    pub to: Snapshot,
    pub duration_ms: f64,
    pub start_ms: f64,
}

impl Tween {
    pub fn new(from: Snapshot, to: Snapshot, duration_ms: f64, start_ms: f64) -> Self {
        debug_assert!(duration_ms > 0.0);
        Self { from, to, duration_ms, start_ms }
    }

    /// Linear progress in `[0, 1]`.
    pub fn progress(&self, now_ms: f64) -> f64 {
        ((now_ms - self.start_ms) / self.duration_ms).clamp(0.0, 1.0)
    }

    pub fn eased(&self, now_ms: f64) -> f64 {
        smoothstep(self.progress(now_ms))
    }

    pub fn evaluate(&self, now_ms: f64) -> Snapshot {
        interpolate(&self.from, &self.to, self.eased(now_ms))
    }

    pub fn is_finished(&self, now_ms: f64) -> bool {
        now_ms >= self.start_ms + self.duration_ms
    }
}
