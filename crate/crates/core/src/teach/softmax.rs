//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Objective: mean cross-entropy over all samples plus `(l2 / 2) * ||W||²`
//! (the bias is not regularized). Parameters start at zero and samples are
//! visited in insertion order, so training is bit-reproducible.

use serde::{Deserialize, Serialize};

use super::model::digest;
use super::{ClassifierModel, Head, TeachError, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SoftmaxParams {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for SoftmaxParams {
    fn default() -> Self {
        Self { lr: 0.5, epochs: 200, l2: 1e-4 }
    }
}

impl SoftmaxParams {
    /// Schedule used by the automatic head. Unit-norm inputs bound the
    /// Hessian by 1/2, so any `lr < 4` still decreases the loss every epoch;
    /// the longer run reaches confidences that clear the smoother threshold.
    pub const AUTO: SoftmaxParams = SoftmaxParams { lr: 3.0, epochs: 3000, l2: 1e-4 };
}

/// A trained softmax model with its loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxFit {
    pub model: ClassifierModel,
    /// `losses[e]` is the objective before epoch `e`; the last entry is the
    /// objective of the returned parameters (`epochs + 1` entries).
    pub losses: Vec<f64>,
}

impl SoftmaxFit {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one loss")
    }
}

/// Weights and bias of a `K`-class head over `D`-dim inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Params {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self { weights: vec![vec![0.0; dim]; classes], bias: vec![0.0; classes] }
    }
}

/// Softmax of `W x + b` with max-subtraction.
pub fn probabilities(weights: &[Vec<f64>], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = weights
        .iter()
        .zip(bias)
        .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect();
    softmax_in_place(logits)
}

fn softmax_in_place(mut z: Vec<f64>) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
    z
}

/// Objective value and gradient over a labeled batch.
pub struct Objective<'a> {
    pub inputs: Vec<&'a [f64]>,
    pub labels: Vec<usize>,
    pub l2: f64,
}

impl<'a> Objective<'a> {
    pub fn from_set(set: &'a TrainingSet, l2: f64) -> Self {
        Self {
            inputs: set.samples().iter().map(|s| s.embedding.values()).collect(),
            labels: set.samples().iter().map(|s| s.class).collect(),
            l2,
        }
    }

    fn regularizer(&self, p: &Params) -> f64 {
        let sq: f64 = p.weights.iter().flat_map(|r| r.iter()).map(|w| w * w).sum();
        0.5 * self.l2 * sq
    }

    pub fn loss(&self, p: &Params) -> f64 {
        let n = self.inputs.len() as f64;
        let mut ce = 0.0;
        for (x, &y) in self.inputs.iter().zip(&self.labels) {
            let probs = probabilities(&p.weights, &p.bias, x);
            ce -= probs[y].ln();
        }
        ce / n + self.regularizer(p)
    }

    pub fn loss_and_gradient(&self, p: &Params) -> (f64, Params) {
        let classes = p.bias.len();
        let dim = p.weights.first().map_or(0, Vec::len);
        let n = self.inputs.len() as f64;
        let mut grad = Params::zeros(classes, dim);
        let mut ce = 0.0;
        for (x, &y) in self.inputs.iter().zip(&self.labels) {
            let probs = probabilities(&p.weights, &p.bias, x);
            ce -= probs[y].ln();
            for (c, &pc) in probs.iter().enumerate() {
                let delta = pc - if c == y { 1.0 } else { 0.0 };
                grad.bias[c] += delta;
                for (g, v) in grad.weights[c].iter_mut().zip(x.iter()) {
                    *g += delta * v;
                }
            }
        }
        for c in 0..classes {
            grad.bias[c] /= n;
            for (g, w) in grad.weights[c].iter_mut().zip(&p.weights[c]) {
                *g = *g / n + self.l2 * w;
            }
        }
        (ce / n + self.regularizer(p), grad)
    }
}

pub fn train_softmax(set: &TrainingSet, hp: &SoftmaxParams) -> Result<SoftmaxFit, TeachError> {
    train_softmax_with(set, hp, |_, _| true)
}

/// Like [`train_softmax`], calling `observer(epoch, loss)` before every epoch.
/// Returning `false` cancels training.
pub fn train_softmax_with(
    set: &TrainingSet,
    hp: &SoftmaxParams,
    mut observer: impl FnMut(usize, f64) -> bool,
) -> Result<SoftmaxFit, TeachError> {
    if !(hp.lr > 0.0 && hp.lr.is_finite()) || !(hp.l2 >= 0.0 && hp.l2.is_finite()) {
        return Err(TeachError::InvalidHyperparameter(format!("lr={} l2={}", hp.lr, hp.l2)));
    }
    set.check_trainable()?;
    if set.classes().len() < 2 {
        return Err(TeachError::TooFewClasses(set.classes().len()));
    }
    let objective = Objective::from_set(set, hp.l2);
    let mut params = Params::zeros(set.classes().len(), set.embedding_dim());
    let mut losses = Vec::with_capacity(hp.epochs + 1);
    for epoch in 0..hp.epochs {
        let (loss, grad) = objective.loss_and_gradient(&params);
        if !loss.is_finite() {
            return Err(TeachError::NonFiniteLoss { epoch });
        }
        losses.push(loss);
        if !observer(epoch, loss) {
            return Err(TeachError::Cancelled);
        }
        for (row, grow) in params.weights.iter_mut().zip(&grad.weights) {
            for (w, g) in row.iter_mut().zip(grow) {
                *w -= hp.lr * g;
            }
        }
        for (b, g) in params.bias.iter_mut().zip(&grad.bias) {
            *b -= hp.lr * g;
        }
    }
    let final_loss = objective.loss(&params);
    if !final_loss.is_finite() || params.weights.iter().flatten().any(|w| !w.is_finite()) {
        return Err(TeachError::NonFiniteLoss { epoch: hp.epochs });
    }
    losses.push(final_loss);
    observer(hp.epochs, final_loss);

    let model = ClassifierModel {
        head: Head::Softmax { weights: params.weights, bias: params.bias, final_loss },
        embedding_dim: set.embedding_dim(),
        classes: set.classes().to_vec(),
        trained_at_ms: 0,
        config_digest: digest("softmax", hp),
    };
    Ok(SoftmaxFit { model, losses })
}
