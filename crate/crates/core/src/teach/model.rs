use serde::{Deserialize, Serialize};

use super::{knn, softmax, Embedding, SoftmaxParams, StateClass, TeachError, TrainingSet};
use crate::ids::StateId;

/// A stored training vector of the knn head (unit norm).
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub state_id: StateId,
    pub class: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Knn {
        k: usize,
        /// Set when the requested `k` exceeded the number of exemplars.
        k_clamped: bool,
        exemplars: Vec<Exemplar>,
    },
    Softmax {
        /// `K x D`, one row per class.
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        final_loss: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelWire", try_from = "ModelWire")]
pub struct ClassifierModel {
    pub head: Head,
    pub embedding_dim: usize,
    pub classes: Vec<StateClass>,
    pub trained_at_ms: u64,
    pub config_digest: String,
}

/// Flat file form: head-specific fields are present only for their head.
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ModelWire {
    head_kind: String,
    embedding_dim: usize,
    classes: Vec<StateClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_clamped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    knn_exemplars: Option<Vec<WireExemplar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
    trained_at_ms: u64,
    config_digest: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct WireExemplar {
    vector: Vec<f64>,
    state_id: StateId,
}

impl From<ClassifierModel> for ModelWire {
    fn from(m: ClassifierModel) -> Self {
        let mut w = ModelWire {
            head_kind: m.head_kind().to_owned(),
            embedding_dim: m.embedding_dim,
            classes: m.classes,
            k: None,
            k_clamped: None,
            knn_exemplars: None,
            weights: None,
            bias: None,
            final_loss: None,
            trained_at_ms: m.trained_at_ms,
            config_digest: m.config_digest,
        };
        match m.head {
            Head::Knn { k, k_clamped, exemplars } => {
                w.k = Some(k);
                w.k_clamped = Some(k_clamped);
                w.knn_exemplars = Some(exemplars.into_iter().map(|e| WireExemplar { vector: e.values, state_id: e.state_id }).collect());
            }
            Head::Softmax { weights, bias, final_loss } => {
                w.weights = Some(weights);
                w.bias = Some(bias);
                w.final_loss = Some(final_loss);
            }
        }
        w
    }
}

impl TryFrom<ModelWire> for ClassifierModel {
    type Error = String;

    fn try_from(w: ModelWire) -> Result<Self, String> {
        let ordinal = |id: &StateId| w.classes.iter().position(|c| &c.state_id == id);
        let head = match w.head_kind.as_str() {
            "knn" => {
                let exemplars = w
                    .knn_exemplars
                    .ok_or("knn model without knnExemplars")?
                    .into_iter()
                    .map(|e| match ordinal(&e.state_id) {
                        Some(class) => Ok(Exemplar { class, state_id: e.state_id, values: e.vector }),
                        None => Err(format!("exemplar of unknown state {}", e.state_id)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Head::Knn { k: w.k.ok_or("knn model without k")?, k_clamped: w.k_clamped.unwrap_or(false), exemplars }
            }
            "softmax" => {
                let weights = w.weights.ok_or("softmax model without weights")?;
                let bias = w.bias.ok_or("softmax model without bias")?;
                if weights.len() != w.classes.len() || bias.len() != w.classes.len() {
                    return Err("softmax rows do not match the class list".into());
                }
                if weights.iter().any(|r| r.len() != w.embedding_dim) {
                    return Err("softmax row length differs from embeddingDim".into());
                }
                Head::Softmax { weights, bias, final_loss: w.final_loss.unwrap_or(f64::NAN) }
            }
            other => return Err(format!("unknown headKind {other}")),
        };
        Ok(ClassifierModel {
            head,
            embedding_dim: w.embedding_dim,
            classes: w.classes,
            trained_at_ms: w.trained_at_ms,
            config_digest: w.config_digest,
        })
    }
}

impl ClassifierModel {
    pub fn head_kind(&self) -> &'static str {
        match self.head {
            Head::Knn { .. } => "knn",
            Head::Softmax { .. } => "softmax",
        }
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, state_id: &StateId) -> Option<usize> {
        self.classes.iter().position(|c| &c.state_id == state_id)
    }

    pub fn predict(&self, emb: &Embedding) -> Result<Prediction, TeachError> {
        predict(self, emb)
    }
}

/// Per-state probabilities for one embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub top_state_id: StateId,
    pub top_ordinal: usize,
    pub top_confidence: f64,
    pub timestamp_ms: u64,
}

impl Prediction {
    /// Picks the top class: highest probability, lowest ordinal on ties.
    pub(crate) fn from_probabilities(model: &ClassifierModel, probabilities: Vec<f64>) -> Prediction {
        let mut top = 0;
        for (i, &p) in probabilities.iter().enumerate() {
            if p > probabilities[top] {
                top = i;
            }
        }
        Prediction {
            top_state_id: model.classes[top].state_id.clone(),
            top_ordinal: top,
            top_confidence: probabilities[top],
            probabilities,
            timestamp_ms: 0,
        }
    }

    pub fn at(mut self, timestamp_ms: u64) -> Self {
        self.timestamp_ms = timestamp_ms;
        self
    }
}

pub fn predict(model: &ClassifierModel, emb: &Embedding) -> Result<Prediction, TeachError> {
    if emb.dim() != model.embedding_dim {
        return Err(TeachError::DimensionMismatch { expected: model.embedding_dim, found: emb.dim() });
    }
    Ok(match &model.head {
        Head::Knn { k, exemplars, .. } => knn::predict_knn(model, *k, exemplars, emb),
        Head::Softmax { weights, bias, .. } => {
            let probs = softmax::probabilities(weights, bias, emb.values());
            Prediction::from_probabilities(model, probs)
        }
    })
}

/// Which head to train.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "head", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum HeadSpec {
    Knn { k: usize },
    Softmax(SoftmaxParams),
    /// Softmax with [`SoftmaxParams::AUTO`] when there are two or more states,
    /// knn with the default `k` otherwise.
    #[default]
    Auto,
}

pub fn train(set: &TrainingSet, spec: &HeadSpec) -> Result<ClassifierModel, TeachError> {
    match spec {
        HeadSpec::Knn { k } => knn::train_knn(set, *k),
        HeadSpec::Softmax(hp) => softmax::train_softmax(set, hp).map(|fit| fit.model),
        HeadSpec::Auto if set.classes().len() >= 2 => softmax::train_softmax(set, &SoftmaxParams::AUTO).map(|fit| fit.model),
        HeadSpec::Auto => knn::train_knn(set, knn::DEFAULT_K),
    }
}

pub(crate) fn digest(label: &str, params: &impl Serialize) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_string(params).expect("hyperparameters serialize");
    let hash = Sha256::digest(format!("{label}:{json}").as_bytes());
    hex::encode(&hash[..8])
}
