//! Cosine-similarity k-nearest-neighbor head. Training stores exemplars.

use serde::Serialize;

use super::model::digest;
use super::{ClassifierModel, Embedding, Exemplar, Head, Prediction, TeachError, TrainingSet};

pub const DEFAULT_K: usize = 5;

pub fn train_knn(set: &TrainingSet, k: usize) -> Result<ClassifierModel, TeachError> {
    set.check_trainable()?;
    if k == 0 {
        return Err(TeachError::InvalidHyperparameter("k must be at least 1".into()));
    }
    let exemplars: Vec<Exemplar> = set
        .samples()
        .iter()
        .map(|s| Exemplar {
            state_id: set.classes()[s.class].state_id.clone(),
            class: s.class,
            values: unit(s.embedding.values()),
        })
        .collect();
    let k_clamped = k > exemplars.len();
    let k_eff = k.min(exemplars.len());
    if k_clamped {
        log::warn!("knn: k={k} exceeds {} exemplars, clamped", exemplars.len());
    }
    #[derive(Serialize)]
    struct Params {
        k: usize,
    }
    Ok(ClassifierModel {
        head: Head::Knn { k: k_eff, k_clamped, exemplars },
        embedding_dim: set.embedding_dim(),
        classes: set.classes().to_vec(),
        trained_at_ms: 0,
        config_digest: digest("knn", &Params { k }),
    })
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Top-`k` vote. Probabilities are vote fractions; the winning class has the
/// most votes, then the greater mean similarity, then the lower ordinal.
pub(crate) fn predict_knn(model: &ClassifierModel, k: usize, exemplars: &[Exemplar], emb: &Embedding) -> Prediction {
    let query = unit(emb.values());
    let mut scored: Vec<(f64, usize)> = exemplars
        .iter()
        .enumerate()
        .map(|(i, ex)| (ex.values.iter().zip(&query).map(|(a, b)| a * b).sum::<f64>(), i))
        .collect();
    // similarity descending, exemplar index ascending
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let classes = model.class_count();
    let mut votes = vec![0usize; classes];
    let mut sim_sum = vec![0.0f64; classes];
    for &(sim, i) in scored.iter().take(k) {
        let c = exemplars[i].class;
        votes[c] += 1;
        sim_sum[c] += sim;
    }
    let mut top = 0;
    for c in 1..classes {
        let better = votes[c] > votes[top]
            || (votes[c] == votes[top]
                && votes[c] > 0
                && sim_sum[c] / votes[c] as f64 > sim_sum[top] / votes[top] as f64);
        if better {
            top = c;
        }
    }
    let probabilities: Vec<f64> = votes.iter().map(|&v| v as f64 / k as f64).collect();
    Prediction {
        top_state_id: model.classes[top].state_id.clone(),
        top_ordinal: top,
        top_confidence: probabilities[top],
        probabilities,
        timestamp_ms: 0,
    }
}
