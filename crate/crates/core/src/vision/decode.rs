use super::{Frame, VisionError};

/// Encodings accepted by [`decode_frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Png,
    PpmP6,
    RawRgb { width: u32, height: u32 },
}

pub fn decode_frame(bytes: &[u8], format: FrameFormat) -> Result<Frame, VisionError> {
    match format {
        FrameFormat::Png => decode_png(bytes),
        FrameFormat::PpmP6 => decode_ppm(bytes),
        FrameFormat::RawRgb { width, height } => {
            let expected = width as usize * height as usize * 3;
            if bytes.len() != expected {
                return Err(VisionError::MalformedImage(format!(
                    "raw payload is {} bytes, expected {expected}",
                    bytes.len()
                )));
            }
            Frame::new(width, height, bytes.to_vec(), 0)
        }
    }
}

fn decode_png(bytes: &[u8]) -> Result<Frame, VisionError> {
    use image::{ColorType, ImageFormat};

    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| VisionError::MalformedImage(e.to_string()))?;
    match img.color() {
        ColorType::Rgb8 | ColorType::Rgba8 | ColorType::L8 | ColorType::La8 => {}
        other => return Err(VisionError::UnsupportedFormat(format!("png color type {other:?}"))),
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Frame::new(w, h, rgb.into_raw(), 0)
}

/// Cursor over the whitespace/comment separated PPM header.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<u32, VisionError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| VisionError::MalformedImage(format!("bad PPM header at byte {start}")))
    }
}

fn decode_ppm(bytes: &[u8]) -> Result<Frame, VisionError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(VisionError::MalformedImage("missing P6 magic".into()));
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number()?;
    let height = header.number()?;
    let maxval = header.number()?;
    if maxval != 255 {
        return Err(VisionError::UnsupportedFormat(format!("PPM maxval {maxval} (only 255 supported)")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(header.pos) {
        Some(c) if c.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(VisionError::MalformedImage("truncated PPM header".into())),
    }
    let payload = &bytes[header.pos..];
    let expected = width as usize * height as usize * 3;
    if payload.len() < expected {
        return Err(VisionError::MalformedImage(format!(
            "PPM payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    Frame::new(width, height, payload[..expected].to_vec(), 0)
}

/// Serializes a frame as binary PPM (P6, maxval 255).
pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}
