//! Frames, decoding, resizing and the deterministic frame embedding.

mod decode;
mod embed;
mod frame;
mod import;
mod resize;

pub use decode::{decode_frame, encode_ppm, FrameFormat};
pub use embed::{embed, embed_parts, EmbeddingParts, COLOR_BLOCK_DIM, EMBEDDING_DIM, GRADIENT_BLOCK_DIM, WORKING_SIZE};
pub use frame::Frame;
pub use import::{import_embeddings, parse_embeddings};
pub use resize::resize_bilinear;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("bad dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("embedding dimension {found} differs from {expected} on line {line}")]
    InconsistentDimension { line: usize, expected: usize, found: usize },
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for VisionError {
    fn from(e: std::io::Error) -> Self {
        VisionError::Io(e.to_string())
    }
}
