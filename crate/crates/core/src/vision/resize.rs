use super::{Frame, VisionError};

/// Source sample positions and weights for one output axis.
///
/// Output pixel `i` is centered at `(i + 0.5) * src / dst - 0.5` in source
/// coordinates, clamped to the valid range.
fn axis_taps(src: u32, dst: u32) -> Vec<(usize, usize, f64)> {
    let ratio = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, last);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src as usize - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize with half-pixel centers. The timestamp is preserved.
pub fn resize_bilinear(frame: &Frame, width: u32, height: u32) -> Result<Frame, VisionError> {
    if width == 0 || height == 0 {
        return Err(VisionError::BadDimensions { width, height });
    }
    if width == frame.width() && height == frame.height() {
        return Ok(frame.clone());
    }
    let xs = axis_taps(frame.width(), width);
    let ys = axis_taps(frame.height(), height);
    let src = frame.pixels();
    let stride = frame.width() as usize * 3;
    let mut out = Vec::with_capacity(width as usize * height as usize * 3);
    for &(y0, y1, fy) in &ys {
        let (r0, r1) = (y0 * stride, y1 * stride);
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let p00 = src[r0 + x0 * 3 + c] as f64;
                let p01 = src[r0 + x1 * 3 + c] as f64;
                let p10 = src[r1 + x0 * 3 + c] as f64;
                let p11 = src[r1 + x1 * 3 + c] as f64;
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                let v = top + (bottom - top) * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Frame::new(width, height, out, frame.timestamp_ms)
}
