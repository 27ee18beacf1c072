//! Keypoint line protocol: `t_ms;id:x,y,c;id:x,y,c;...`, one frame per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrackingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
    #[serde(default)]
    pub out_of_frame: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeypointFrame {
    pub timestamp_ms: u64,
    pub points: BTreeMap<String, Keypoint>,
}

impl KeypointFrame {
    /// Flags points outside a `width x height` image.
    pub fn flag_bounds(&mut self, width: u32, height: u32) {
        for p in self.points.values_mut() {
            p.out_of_frame = !(p.x >= 0.0 && p.y >= 0.0 && p.x < width as f64 && p.y < height as f64);
        }
    }
}

pub fn ingest_keypoints(line: &str) -> Result<KeypointFrame, TrackingError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let err = |offset: usize, message: &str| TrackingError::ParseError { offset, message: message.into() };
    let (ts, rest) = match line.find(';') {
        Some(i) => (&line[..i], Some((i + 1, &line[i + 1..]))),
        None => (line, None),
    };
    let timestamp_ms = ts.trim().parse().map_err(|_| err(0, "bad timestamp"))?;
    let mut frame = KeypointFrame { timestamp_ms, points: BTreeMap::new() };
    let Some((mut offset, rest)) = rest else {
        return Ok(frame);
    };
    for entry in rest.split(';') {
        let start = offset;
        offset += entry.len() + 1;
        if entry.trim().is_empty() {
            continue;
        }
        let (id, coords) = entry.split_once(':').ok_or_else(|| err(start, "expected id:x,y,c"))?;
        if id.trim().is_empty() {
            return Err(err(start, "empty keypoint id"));
        }
        let coord_offset = start + id.len() + 1;
        let nums: Vec<&str> = coords.split(',').collect();
        if nums.len() != 3 {
            return Err(err(coord_offset, "expected three comma-separated numbers"));
        }
        let mut v = [0.0; 3];
        for (slot, s) in v.iter_mut().zip(&nums) {
            *slot = s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(coord_offset, "bad number"))?;
        }
        if !(0.0..=1.0).contains(&v[2]) {
            return Err(err(coord_offset, "confidence outside [0,1]"));
        }
        frame.points.insert(
            id.trim().to_owned(),
            Keypoint { x: v[0], y: v[1], confidence: v[2], out_of_frame: false },
        );
    }
    Ok(frame)
}
