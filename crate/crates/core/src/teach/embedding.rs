use serde::{Deserialize, Serialize};

/// A feature vector consumed by a classification head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Embedding {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_frame_id: Option<String>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, source_frame_id: None }
    }

    pub fn with_source(mut self, id: impl Into<String>) -> Self {
        self.source_frame_id = Some(id.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn source_frame_id(&self) -> Option<&str> {
        self.source_frame_id.as_deref()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit L2 norm; `None` for the zero vector.
    pub fn normalized(mut self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Some(self)
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Embedding::new(v)
    }
}
