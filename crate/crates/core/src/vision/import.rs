//! Import of externally computed embeddings.
//!
//! One sample per line: `id,D,v1,...,vD`. Blank lines and lines starting with
//! `#` are skipped. `D` must be the same on every line.

use std::collections::BTreeMap;
use std::path::Path;

use super::VisionError;
use crate::teach::Embedding;

pub fn import_embeddings(path: impl AsRef<Path>) -> Result<BTreeMap<String, Embedding>, VisionError> {
    let text = std::fs::read_to_string(path)?;
    parse_embeddings(&text)
}

pub fn parse_embeddings(text: &str) -> Result<BTreeMap<String, Embedding>, VisionError> {
    let mut out = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| VisionError::ParseError { line: line_no, message };
        let mut fields = line.split(',').map(str::trim);
        let id = fields.next().filter(|s| !s.is_empty()).ok_or_else(|| err("missing id".into()))?;
        let d: usize = fields
            .next()
            .ok_or_else(|| err("missing dimension".into()))?
            .parse()
            .map_err(|e| err(format!("bad dimension: {e}")))?;
        if d == 0 {
            return Err(err("dimension must be positive".into()));
        }
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad value {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != d {
            return Err(err(format!("declared {d} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(VisionError::InconsistentDimension { line: line_no, expected, found: d })
            }
            _ => {}
        }
        let emb = Embedding::new(values)
            .normalized()
            .ok_or_else(|| err("zero vector cannot be normalized".into()))?
            .with_source(id);
        if out.insert(id.to_owned(), emb).is_some() {
            return Err(err(format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}
