//! Background training with progress, cancellation and atomic model swap.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use super::{knn, model, softmax, ClassifierModel, HeadSpec, SoftmaxParams, TeachError, TrainingSet};

/// Shared slot holding the model used by the live pipeline. Readers take a
/// cheap `Arc` clone and never observe a partially trained model.
#[derive(Debug, Clone, Default)]
pub struct ModelSlot(Arc<RwLock<Option<Arc<ClassifierModel>>>>);

impl ModelSlot {
    pub fn get(&self) -> Option<Arc<ClassifierModel>> {
        self.0.read().expect("model slot poisoned").clone()
    }

    pub fn swap(&self, model: ClassifierModel) -> Option<Arc<ClassifierModel>> {
        self.0.write().expect("model slot poisoned").replace(Arc::new(model))
    }

    pub fn clear(&self) {
        *self.0.write().expect("model slot poisoned") = None;
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainingProgress(Arc<AtomicU64>);

impl TrainingProgress {
    fn set(&self, v: f64) {
        self.0.store(v.to_bits(), Ordering::Release);
    }

    /// Fraction complete in `[0, 1]`.
    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }
}

/// A training run on its own thread.
pub struct TrainingJob {
    cancel: Arc<AtomicBool>,
    progress: TrainingProgress,
    handle: Option<JoinHandle<Result<ClassifierModel, TeachError>>>,
}

impl TrainingJob {
    /// Starts training. `on_done` runs on the worker thread with the result.
    pub fn spawn<F>(set: TrainingSet, spec: HeadSpec, on_done: F) -> Self
    where
        F: FnOnce(&Result<ClassifierModel, TeachError>) + Send + 'static,
    {
        let cancel = Arc::new(AtomicBool::new(false));
        let progress = TrainingProgress::default();
        let (c, p) = (cancel.clone(), progress.clone());
        let handle = std::thread::Builder::new()
            .name("teach-train".into())
            .spawn(move || {
                let result = run(&set, &spec, &c, &p);
                if result.is_ok() {
                    p.set(1.0);
                }
                on_done(&result);
                result
            })
            .expect("spawn training thread");
        Self { cancel, progress, handle: Some(handle) }
    }

    pub fn progress(&self) -> f64 {
        self.progress.get()
    }

    pub fn progress_handle(&self) -> TrainingProgress {
        self.progress.clone()
    }

    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::Release);
    }

    pub fn is_finished(&self) -> bool {
        self.handle.as_ref().is_none_or(JoinHandle::is_finished)
    }

    pub fn join(mut self) -> Result<ClassifierModel, TeachError> {
        self.handle
            .take()
            .expect("joined once")
            .join()
            .unwrap_or(Err(TeachError::Cancelled))
    }
}

fn run(
    set: &TrainingSet,
    spec: &HeadSpec,
    cancel: &AtomicBool,
    progress: &TrainingProgress,
) -> Result<ClassifierModel, TeachError> {
    let hp = match spec {
        HeadSpec::Softmax(hp) => *hp,
        HeadSpec::Auto if set.classes().len() >= 2 => SoftmaxParams::AUTO,
        HeadSpec::Auto => return knn::train_knn(set, knn::DEFAULT_K),
        HeadSpec::Knn { .. } => return model::train(set, spec),
    };
    let epochs = hp.epochs.max(1) as f64;
    softmax::train_softmax_with(set, &hp, |epoch, _| {
        progress.set(epoch as f64 / epochs);
        !cancel.load(Ordering::Acquire)
    })
    .map(|fit| fit.model)
}
