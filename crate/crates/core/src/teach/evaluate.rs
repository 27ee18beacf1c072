use serde::{Deserialize, Serialize};

use super::{predict, ClassifierModel, Embedding, TeachError};
use crate::ids::StateId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`, indexed by class ordinal.
    pub confusion: Vec<Vec<u64>>,
}

impl Evaluation {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

pub fn evaluate(model: &ClassifierModel, corpus: &[(Embedding, StateId)]) -> Result<Evaluation, TeachError> {
    if corpus.is_empty() {
        return Err(TeachError::EmptyCorpus);
    }
    let k = model.class_count();
    let mut confusion = vec![vec![0u64; k]; k];
    for (emb, label) in corpus {
        let truth = model.class_index(label).ok_or_else(|| TeachError::UnknownState(label.clone()))?;
        let p = predict(model, emb)?;
        confusion[truth][p.top_ordinal] += 1;
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    Ok(Evaluation { accuracy: correct as f64 / corpus.len() as f64, confusion })
}
