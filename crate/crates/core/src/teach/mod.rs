//! Interactive machine teaching: labeled samples, on-demand training of a
//! classification head, prediction, smoothing into stable state events, and
//! evaluation.

mod embedding;
mod evaluate;
mod job;
mod knn;
mod model;
mod smoother;
pub mod softmax;
mod training_set;

pub use embedding::Embedding;
pub use evaluate::{evaluate, Evaluation};
pub use job::{ModelSlot, TrainingJob, TrainingProgress};
pub use knn::{train_knn, DEFAULT_K};
pub use model::{predict, train, ClassifierModel, Exemplar, Head, HeadSpec, Prediction};
pub use smoother::{smooth, Smoother, SmootherConfig, SmootherState, StateEvent};
pub use softmax::{train_softmax, train_softmax_with, SoftmaxFit, SoftmaxParams};
pub use training_set::{Sample, StateClass, TrainingSet};

use thiserror::Error;

use crate::ids::StateId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeachError {
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("duplicate state {0}")]
    DuplicateState(StateId),
    #[error("embedding has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state {0} has no samples")]
    EmptyClass(StateId),
    #[error("softmax head needs at least 2 states, found {0}; use the knn head")]
    TooFewClasses(usize),
    #[error("training set has no states")]
    NoClasses,
    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("evaluation corpus is empty")]
    EmptyCorpus,
    #[error("training cancelled")]
    Cancelled,
    #[error("invalid smoother config: {0}")]
    InvalidConfig(String),
}
