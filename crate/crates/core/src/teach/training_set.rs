use serde::{Deserialize, Serialize};

use super::{Embedding, TeachError};
use crate::ids::{SampleId, StateId};

/// One user-defined state as seen by the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateClass {
    pub state_id: StateId,
    pub name: String,
    pub ordinal: usize,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: SampleId,
    pub class: usize,
    pub embedding: Embedding,
}

/// Labeled embeddings grouped by state. Samples keep global insertion order,
/// which fixes the summation order used by training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    classes: Vec<StateClass>,
    samples: Vec<Sample>,
    embedding_dim: usize,
}

impl TrainingSet {
    pub fn new(embedding_dim: usize) -> Self {
        Self { classes: Vec::new(), samples: Vec::new(), embedding_dim }
    }

    /// Convenience constructor: one class per `(id, name)` pair, in order.
    pub fn with_classes<I, S>(embedding_dim: usize, classes: I) -> Result<Self, TeachError>
    where
        I: IntoIterator<Item = (S, String)>,
        S: Into<StateId>,
    {
        let mut set = TrainingSet::new(embedding_dim);
        for (id, name) in classes {
            set.add_class(id.into(), name)?;
        }
        Ok(set)
    }

    pub fn add_class(&mut self, state_id: StateId, name: impl Into<String>) -> Result<&StateClass, TeachError> {
        if self.class_index(&state_id).is_some() {
            return Err(TeachError::DuplicateState(state_id));
        }
        let ordinal = self.classes.len();
        self.classes.push(StateClass { state_id, name: name.into(), ordinal, sample_count: 0 });
        Ok(&self.classes[ordinal])
    }

    pub fn add_sample(&mut self, state_id: &StateId, emb: Embedding) -> Result<SampleId, TeachError> {
        let class = self.class_index(state_id).ok_or_else(|| TeachError::UnknownState(state_id.clone()))?;
        if emb.dim() != self.embedding_dim {
            return Err(TeachError::DimensionMismatch { expected: self.embedding_dim, found: emb.dim() });
        }
        let cls = &mut self.classes[class];
        let id = SampleId::new(format!("{}#{}", cls.state_id, cls.sample_count));
        cls.sample_count += 1;
        self.samples.push(Sample { id: id.clone(), class, embedding: emb });
        Ok(id)
    }

    pub fn class_index(&self, state_id: &StateId) -> Option<usize> {
        self.classes.iter().position(|c| &c.state_id == state_id)
    }

    pub fn classes(&self) -> &[StateClass] {
        &self.classes
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn samples_of<'a>(&'a self, state_id: &StateId) -> impl Iterator<Item = &'a Sample> + 'a {
        let class = self.class_index(state_id);
        self.samples.iter().filter(move |s| Some(s.class) == class)
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fails with `EmptyClass` naming the first state without samples.
    pub fn check_trainable(&self) -> Result<(), TeachError> {
        if self.classes.is_empty() {
            return Err(TeachError::NoClasses);
        }
        match self.classes.iter().find(|c| c.sample_count == 0) {
            Some(c) => Err(TeachError::EmptyClass(c.state_id.clone())),
            None => Ok(()),
        }
    }
}
