//! Chroma-space color tracking with 4-connected component labeling.
//!
//! Chroma is `(R / (R+G+B+1), G / (R+G+B+1))`; intensity is `(R+G+B) / 3`.

use serde::{Deserialize, Serialize};

use super::TrackingError;
use crate::ids::TrackerId;
use crate::vision::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColorTracker {
    pub tracker_id: TrackerId,
    pub target_chroma: (f64, f64),
    pub chroma_tolerance: f64,
    pub min_intensity: f64,
    pub min_blob_area: usize,
}

impl ColorTracker {
    pub fn new(tracker_id: impl Into<TrackerId>, target_chroma: (f64, f64)) -> Self {
        Self {
            tracker_id: tracker_id.into(),
            target_chroma,
            chroma_tolerance: 0.08,
            min_intensity: 30.0,
            min_blob_area: 50,
        }
    }

    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.chroma_tolerance > 0.0 && self.min_intensity >= 0.0) {
            return Err(TrackingError::InvalidTracker(format!("{}: tolerances must be positive", self.tracker_id)));
        }
        Ok(())
    }

    /// Whether one pixel belongs to the mask.
    pub fn matches(&self, rgb: [u8; 3]) -> bool {
        let intensity = (rgb[0] as f64 + rgb[1] as f64 + rgb[2] as f64) / 3.0;
        if intensity < self.min_intensity {
            return false;
        }
        let (r, g) = chroma([rgb[0] as f64, rgb[1] as f64, rgb[2] as f64]);
        let (dr, dg) = (r - self.target_chroma.0, g - self.target_chroma.1);
        (dr * dr + dg * dg).sqrt() <= self.chroma_tolerance
    }
}

pub fn chroma(rgb: [f64; 3]) -> (f64, f64) {
    let s = rgb[0] + rgb[1] + rgb[2] + 1.0;
    (rgb[0] / s, rgb[1] / s)
}

/// Tracker targeting the mean color of the 5x5 patch around `(x, y)`;
/// patch coordinates are clamped to the frame.
pub fn pick_color(frame: &Frame, x: i64, y: i64, tracker_id: impl Into<TrackerId>) -> Result<ColorTracker, TrackingError> {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    if x < 0 || y < 0 || x >= w || y >= h {
        return Err(TrackingError::OutOfBounds { x, y });
    }
    let mut sum = [0.0f64; 3];
    for dy in -2..=2 {
        for dx in -2..=2 {
            let px = frame.pixel((x + dx).clamp(0, w - 1) as u32, (y + dy).clamp(0, h - 1) as u32);
            for c in 0..3 {
                sum[c] += px[c] as f64;
            }
        }
    }
    let mean = sum.map(|s| s / 25.0);
    Ok(ColorTracker::new(tracker_id, chroma(mean)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Blob {
    /// Mean of member pixel coordinates (pixel `(x, y)` has center `(x, y)`).
    pub centroid: (f64, f64),
    pub area: usize,
}

/// Largest 4-connected component of the tracker mask with area at least
/// `min_blob_area`. Equal areas go to the component whose first pixel in
/// raster order comes first.
pub fn track_blob(frame: &Frame, tracker: &ColorTracker) -> Option<Blob> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let mask: Vec<bool> = frame
        .pixels()
        .chunks_exact(3)
        .map(|p| tracker.matches([p[0], p[1], p[2]]))
        .collect();

    // two-pass labeling with union-find
    let mut parent: Vec<u32> = Vec::new();
    let mut labels = vec![u32::MAX; w * h];
    fn find(parent: &mut [u32], mut a: u32) -> u32 {
        while parent[a as usize] != a {
            parent[a as usize] = parent[parent[a as usize] as usize];
            a = parent[a as usize];
        }
        a
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            let left = (x > 0 && mask[i - 1]).then(|| labels[i - 1]);
            let up = (y > 0 && mask[i - w]).then(|| labels[i - w]);
            labels[i] = match (left, up) {
                (None, None) => {
                    parent.push(parent.len() as u32);
                    parent.len() as u32 - 1
                }
                (Some(l), None) | (None, Some(l)) => l,
                (Some(l), Some(u)) => {
                    let (rl, ru) = (find(&mut parent, l), find(&mut parent, u));
                    // keep the older root so roots follow raster order of first pixel
                    let (keep, drop) = if rl < ru { (rl, ru) } else { (ru, rl) };
                    parent[drop as usize] = keep;
                    l.min(u)
                }
            };
        }
    }

    let mut area = vec![0usize; parent.len()];
    let mut sx = vec![0.0f64; parent.len()];
    let mut sy = vec![0.0f64; parent.len()];
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == u32::MAX {
                continue;
            }
            let r = find(&mut parent, l) as usize;
            area[r] += 1;
            sx[r] += x as f64;
            sy[r] += y as f64;
        }
    }
    // roots are created in raster order of their first pixel, so the lowest
    // root index among equal areas is the earliest component
    let mut best: Option<usize> = None;
    for r in 0..parent.len() {
        if area[r] == 0 || area[r] < tracker.min_blob_area {
            continue;
        }
        if best.is_none_or(|b| area[r] > area[b]) {
            best = Some(r);
        }
    }
    best.map(|r| Blob { centroid: (sx[r] / area[r] as f64, sy[r] / area[r] as f64), area: area[r] })
}
