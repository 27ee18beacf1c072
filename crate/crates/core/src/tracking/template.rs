//! Zero-mean normalized cross-correlation over a set of template scales.

use serde::{Deserialize, Serialize};

use super::TrackingError;
use crate::vision::{resize_bilinear, Frame};

pub const ACCEPT_SCORE: f64 = 0.7;

/// `1.25^k` for `k = -3..=3`: 0.512 to 1.953, including 1.0.
pub fn default_scales() -> Vec<f64> {
    (-3..=3).map(|k| 1.25f64.powi(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateMatch {
    /// Top-left corner of the matched window.
    pub x: u32,
    pub y: u32,
    pub scale: f64,
    pub score: f64,
    /// Size of the scaled template.
    pub width: u32,
    pub height: u32,
}

impl TemplateMatch {
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + (self.width as f64 - 1.0) / 2.0, self.y as f64 + (self.height as f64 - 1.0) / 2.0)
    }
}

struct Integral {
    w: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Integral {
    fn new(luma: &[f64], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sum = vec![0.0; stride * (h + 1)];
        let mut sq = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let (mut row_s, mut row_q) = (0.0, 0.0);
            for x in 0..w {
                let v = luma[y * w + x];
                row_s += v;
                row_q += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row_s;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + row_q;
            }
        }
        Self { w, sum, sq }
    }

    fn rect(table: &[f64], stride: usize, x: usize, y: usize, w: usize, h: usize) -> f64 {
        table[(y + h) * stride + x + w] - table[y * stride + x + w] - table[(y + h) * stride + x] + table[y * stride + x]
    }

    fn window(&self, x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
        let stride = self.w + 1;
        (Self::rect(&self.sum, stride, x, y, w, h), Self::rect(&self.sq, stride, x, y, w, h))
    }
}

fn variance_sum(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Best NCC match of `template` in `frame` over `scales`. Scales at which
/// the template does not fit inside the frame are skipped. Returns `None`
/// when the best score is below [`ACCEPT_SCORE`].
pub fn locate_template(frame: &Frame, template: &Frame, scales: &[f64]) -> Result<Option<TemplateMatch>, TrackingError> {
    if variance_sum(&template.luma()) <= 1e-9 {
        return Err(TrackingError::FlatTemplate);
    }
    let (fw, fh) = (frame.width() as usize, frame.height() as usize);
    let luma = frame.luma();
    let integral = Integral::new(&luma, fw, fh);

    let mut best: Option<TemplateMatch> = None;
    for &scale in scales {
        let tw = (template.width() as f64 * scale).round() as u32;
        let th = (template.height() as f64 * scale).round() as u32;
        if tw < 2 || th < 2 || tw as usize > fw || th as usize > fh {
            continue;
        }
        let scaled = resize_bilinear(template, tw, th).expect("positive size");
        let mut t = scaled.luma();
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        t.iter_mut().for_each(|v| *v -= mean);
        let t_energy: f64 = t.iter().map(|v| v * v).sum();
        if t_energy <= 1e-9 {
            continue;
        }
        let (tw, th) = (tw as usize, th as usize);
        let n = (tw * th) as f64;
        for y in 0..=fh - th {
            for x in 0..=fw - tw {
                let (s, q) = integral.window(x, y, tw, th);
                let f_energy = q - s * s / n;
                if f_energy <= 1e-9 * n {
                    continue;
                }
                let mut cross = 0.0;
                for ty in 0..th {
                    let row = &luma[(y + ty) * fw + x..][..tw];
                    let trow = &t[ty * tw..][..tw];
                    cross += row.iter().zip(trow).map(|(a, b)| a * b).sum::<f64>();
                }
                let score = (cross / (f_energy * t_energy).sqrt()).clamp(-1.0, 1.0);
                if best.is_none_or(|b| score > b.score) {
                    best = Some(TemplateMatch { x: x as u32, y: y as u32, scale, score, width: tw as u32, height: th as u32 });
                }
            }
        }
    }
    Ok(best.filter(|b| b.score >= ACCEPT_SCORE))
}
