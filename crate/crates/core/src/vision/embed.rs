//! Handcrafted frame descriptor.
//!
//! Layout (320 values):
//! - color block, 192 values: a 4x4 grid of cells, each with three per-channel
//!   (R, G, B) 4-bin histograms over `[0, 256)`, each histogram summing to 1.
//!   Order is cell (row-major), then channel, then bin.
//! - gradient block, 128 values: Sobel on luma, unsigned orientation in
//!   `[0, π)` quantized to 8 bins, magnitude weighted, one histogram per cell,
//!   each L2-normalized with an epsilon guard.
//!
//! The concatenation is L2-normalized with the same guard.

use std::f64::consts::PI;

use super::{resize_bilinear, Frame};
use crate::teach::Embedding;

pub const WORKING_SIZE: u32 = 96;
pub const EMBEDDING_DIM: usize = 320;
pub const COLOR_BLOCK_DIM: usize = 192;
pub const GRADIENT_BLOCK_DIM: usize = 128;

const GRID: usize = 4;
const COLOR_BINS: usize = 4;
const ORIENTATION_BINS: usize = 8;
const EPS: f64 = 1e-6;
/// Sobel components smaller than this are treated as exactly zero.
const SNAP: f64 = 1e-9;

/// The two blocks of the descriptor before the global normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParts {
    pub color: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl EmbeddingParts {
    pub fn into_embedding(self) -> Embedding {
        let mut values = self.color;
        values.extend(self.gradient);
        l2_normalize(&mut values);
        Embedding::new(values)
    }
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let inv = 1.0 / (norm + EPS);
    v.iter_mut().for_each(|x| *x *= inv);
}

/// Computes the descriptor of `frame`. Bitwise deterministic.
pub fn embed(frame: &Frame) -> Embedding {
    embed_parts(frame).into_embedding()
}

pub fn embed_parts(frame: &Frame) -> EmbeddingParts {
    let work = resize_bilinear(frame, WORKING_SIZE, WORKING_SIZE).expect("working size is nonzero");
    EmbeddingParts { color: color_block(&work), gradient: gradient_block(&work) }
}

fn cell_of(x: usize, y: usize) -> usize {
    let cell = WORKING_SIZE as usize / GRID;
    (y / cell) * GRID + x / cell
}

fn color_block(work: &Frame) -> Vec<f64> {
    let n = WORKING_SIZE as usize;
    let mut counts = vec![0u32; GRID * GRID * 3 * COLOR_BINS];
    for y in 0..n {
        for x in 0..n {
            let base = cell_of(x, y) * 3 * COLOR_BINS;
            let px = work.pixel(x as u32, y as u32);
            for (c, &v) in px.iter().enumerate() {
                counts[base + c * COLOR_BINS + v as usize / 64] += 1;
            }
        }
    }
    let per_cell = ((n / GRID) * (n / GRID)) as f64;
    counts.into_iter().map(|c| c as f64 / per_cell).collect()
}

fn gradient_block(work: &Frame) -> Vec<f64> {
    let n = WORKING_SIZE as usize;
    let luma = work.luma();
    let at = |x: isize, y: isize| {
        let cx = x.clamp(0, n as isize - 1) as usize;
        let cy = y.clamp(0, n as isize - 1) as usize;
        luma[cy * n + cx]
    };
    let mut hist = vec![0.0f64; GRID * GRID * ORIENTATION_BINS];
    for y in 0..n as isize {
        for x in 0..n as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            // cancellation noise must not decide between bins 0 and 7
            let gx = if gx.abs() < SNAP { 0.0 } else { gx };
            let gy = if gy.abs() < SNAP { 0.0 } else { gy };
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += PI;
            }
            if theta >= PI {
                theta -= PI;
            }
            let bin = ((theta / (PI / ORIENTATION_BINS as f64)) as usize).min(ORIENTATION_BINS - 1);
            hist[cell_of(x as usize, y as usize) * ORIENTATION_BINS + bin] += mag;
        }
    }
    for cell in hist.chunks_mut(ORIENTATION_BINS) {
        l2_normalize(cell);
    }
    hist
}
