//! Offline workflows behind the `teach` binary. Every command is a plain
//! function so tests and the acceptance harness can drive them directly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context};
use sha2::{Digest, Sha256};

use teachable_core::corpus::{self, CorpusSpec, LabeledFrame, Renderer, LABELS_FILE};
use teachable_core::pipeline::{self, Event};
use teachable_core::project::{self, to_canonical_json, FrameStore, Project};
use teachable_core::teach::{self, evaluate, ClassifierModel, Embedding, Evaluation, Head, HeadSpec, TrainingSet};
use teachable_core::vision::{embed, Frame, EMBEDDING_DIM};
use teachable_core::StateId;

/// Writes the corpus described by `spec` under `out` and returns the labels
/// file path.
pub fn gen_corpus(spec: &CorpusSpec, out: &Path) -> anyhow::Result<PathBuf> {
    let samples = corpus::generate(spec)?;
    Ok(corpus::write_corpus(&samples, out)?)
}

/// Reads `labels.csv` under `dir` and decodes every listed image.
pub fn load_labeled(dir: &Path) -> anyhow::Result<Vec<LabeledFrame>> {
    let labels = dir.join(LABELS_FILE);
    let text = fs::read_to_string(&labels).with_context(|| format!("reading {}", labels.display()))?;
    let entries = corpus::parse_labels(&text)?;
    ensure!(!entries.is_empty(), "{} lists no samples", labels.display());
    entries
        .into_iter()
        .map(|(path, state_id)| {
            let file = dir.join(&path);
            let bytes = fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let frame = project::read_image(&path, &bytes)?;
            Ok(LabeledFrame { path, state_id, frame })
        })
        .collect()
}

/// One sample in five is held out, chosen by a hash of its labeled path so
/// the split never moves between runs or machines.
#[allow(clippy::manual_is_multiple_of)] // newer than the MSRV
pub fn is_held_out(path: &str) -> bool {
    let hash = Sha256::digest(path.as_bytes());
    let head: [u8; 8] = hash[..8].try_into().expect("sha256 is 32 bytes");
    u64::from_be_bytes(head) % 5 == 0
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ClassifierModel,
    pub elapsed: Duration,
    pub train_samples: usize,
    /// `None` when the split left nothing to hold out.
    pub held_out: Option<Evaluation>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        match &self.model.head {
            Head::Softmax { final_loss, .. } => Some(*final_loss),
            Head::Knn { .. } => None,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "trained {} head on {} samples in {:.3} s",
            self.model.head_kind(),
            self.train_samples,
            self.elapsed.as_secs_f64()
        );
        if let Some(loss) = self.final_loss() {
            let _ = write!(s, ", final loss {loss:.6}");
        }
        match &self.held_out {
            Some(ev) => {
                let _ = write!(s, ", held-out accuracy {:.4} ({} samples)", ev.accuracy, ev.total());
            }
            None => s.push_str(", no held-out samples"),
        }
        s
    }
}

/// Classes in first-seen label order.
fn empty_set(samples: &[LabeledFrame]) -> anyhow::Result<TrainingSet> {
    let mut set = TrainingSet::new(EMBEDDING_DIM);
    for s in samples {
        if set.class_index(&s.state_id).is_none() {
            set.add_class(s.state_id.clone(), s.state_id.as_str())?;
        }
    }
    Ok(set)
}

/// Trains on the non-held-out part of `samples` and scores the rest. The
/// timer covers embedding and training.
pub fn train_samples(samples: &[LabeledFrame], head: &HeadSpec) -> anyhow::Result<TrainReport> {
    let start = Instant::now();
    let mut set = empty_set(samples)?;
    let mut held_out: Vec<(Embedding, StateId)> = Vec::new();
    for s in samples {
        let emb = embed(&s.frame).with_source(s.path.clone());
        if is_held_out(&s.path) {
            held_out.push((emb, s.state_id.clone()));
        } else {
            set.add_sample(&s.state_id, emb)?;
        }
    }
    let train_samples = set.len();
    let model = teach::train(&set, head)?;
    let elapsed = start.elapsed();
    let held_out = if held_out.is_empty() { None } else { Some(evaluate(&model, &held_out)?) };
    Ok(TrainReport { model, elapsed, train_samples, held_out })
}

pub fn train(data: &Path, head: &HeadSpec, out: &Path) -> anyhow::Result<TrainReport> {
    let samples = load_labeled(data)?;
    let report = train_samples(&samples, head)?;
    write_model(&report.model, out)?;
    Ok(report)
}

pub fn write_model(model: &ClassifierModel, path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_canonical_json(model)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_model(path: &Path) -> anyhow::Result<ClassifierModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub states: Vec<StateId>,
    pub evaluation: Evaluation,
}

impl EvalReport {
    /// Confusion matrix with row sums (true counts) and column sums.
    pub fn render(&self) -> String {
        let width = self.states.iter().map(|s| s.as_str().len()).max().unwrap_or(0).max(6);
        let mut out = format!("{:width$}", "truth");
        for s in &self.states {
            let _ = write!(out, " {:>width$}", s.as_str());
        }
        let _ = writeln!(out, " {:>width$}", "total");
        let k = self.states.len();
        let mut cols = vec![0u64; k];
        for (i, row) in self.evaluation.confusion.iter().enumerate() {
            let _ = write!(out, "{:width$}", self.states[i].as_str());
            for (j, n) in row.iter().enumerate() {
                cols[j] += n;
                let _ = write!(out, " {n:>width$}");
            }
            let _ = writeln!(out, " {:>width$}", row.iter().sum::<u64>());
        }
        let _ = write!(out, "{:width$}", "total");
        for n in &cols {
            let _ = write!(out, " {n:>width$}");
        }
        let _ = writeln!(out, " {:>width$}", self.evaluation.total());
        let _ = writeln!(out, "accuracy {:.4}", self.evaluation.accuracy);
        out
    }
}

/// Scores the project's model (or `model` when given) on a labeled
/// directory, or on the project's own samples when `data` is `None`.
pub fn eval(project_path: &Path, model: Option<&Path>, data: Option<&Path>) -> anyhow::Result<EvalReport> {
    let (project, frames) = project::load_bundle(project_path)?;
    let model = match model {
        Some(path) => read_model(path)?,
        None => project.model.clone().context("project has no trained model; pass --model")?,
    };
    let corpus: Vec<(Embedding, StateId)> = match data {
        Some(dir) => load_labeled(dir)?.into_iter().map(|s| (embed(&s.frame), s.state_id)).collect(),
        None => {
            let set = project.training_set(&frames)?;
            set.samples().iter().map(|s| (s.embedding.clone(), set.classes()[s.class].state_id.clone())).collect()
        }
    };
    let evaluation = evaluate(&model, &corpus)?;
    Ok(EvalReport { states: model.classes.iter().map(|c| c.state_id.clone()).collect(), evaluation })
}

/// Timestamp of a recorded frame: the last run of digits in its file stem.
pub fn stem_timestamp(name: &str) -> Option<u64> {
    let stem = Path::new(name).file_stem()?.to_str()?;
    let end = stem.rfind(|c: char| c.is_ascii_digit())? + 1;
    let start = stem[..end].rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
    stem[start..end].parse().ok()
}

/// Frames of a recording directory in lexicographic file order. With `fps`
/// timestamps are synthesized from the index (floored to whole ms);
/// otherwise they come from the file names.
pub fn load_frames(dir: &Path, fps: Option<f64>) -> anyhow::Result<Vec<Frame>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| {
            let lower = n.to_ascii_lowercase();
            lower.ends_with(".ppm") || lower.ends_with(".png")
        })
        .collect();
    names.sort();
    ensure!(!names.is_empty(), "{} has no .ppm or .png frames", dir.display());
    if let Some(fps) = fps {
        ensure!(fps > 0.0 && fps.is_finite(), "fps must be positive");
    }
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let bytes = fs::read(dir.join(name))?;
            let frame = project::read_image(name, &bytes)?;
            let t = match fps {
                Some(fps) => (i as f64 * 1000.0 / fps + 1e-9).floor() as u64,
                None => stem_timestamp(name).with_context(|| format!("{name}: no timestamp digits; pass --fps"))?,
            };
            Ok(frame.with_timestamp(t))
        })
        .collect()
}

/// Runs a recording through the trained project and writes the NDJSON event
/// log to `out`.
pub fn replay(project_path: &Path, frames_dir: &Path, fps: Option<f64>, out: &Path) -> anyhow::Result<Vec<Event>> {
    let (project, assets) = project::load_bundle(project_path)?;
    let frames = load_frames(frames_dir, fps)?;
    for pair in frames.windows(2) {
        if pair[1].timestamp_ms < pair[0].timestamp_ms {
            bail!("frame timestamps go backwards ({} after {})", pair[1].timestamp_ms, pair[0].timestamp_ms);
        }
    }
    let events = pipeline::replay(&project, &assets, frames)?;
    let mut buf = Vec::new();
    pipeline::write_ndjson(&events, &mut buf)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?;
    Ok(events)
}

pub enum ExportSource<'a> {
    /// A demo project built over a labeled corpus directory.
    Corpus { dir: &'a Path, renderer: Renderer },
    Project(&'a Path),
}

pub enum ExportModel<'a> {
    Keep,
    File(&'a Path),
    Train,
}

pub fn build_project(source: &ExportSource<'_>, model: &ExportModel<'_>) -> anyhow::Result<(Project, FrameStore)> {
    let (mut project, frames) = match source {
        ExportSource::Corpus { dir, renderer } => corpus::demo_project(*renderer, &load_labeled(dir)?)?,
        ExportSource::Project(path) => project::load_bundle(path)?,
    };
    match model {
        ExportModel::Keep => {}
        ExportModel::File(path) => project.model = Some(read_model(path)?),
        ExportModel::Train => {
            project.train(&frames)?;
        }
    }
    Ok((project, frames))
}

/// Writes a self-contained bundle: `project.json` plus referenced images.
pub fn export(source: &ExportSource<'_>, model: &ExportModel<'_>, out: &Path) -> anyhow::Result<Project> {
    let (project, frames) = build_project(source, model)?;
    fs::create_dir_all(out)?;
    project::save_bundle(&project, &frames, &out.join(project::PROJECT_FILE))?;
    Ok(project)
}

pub fn serve(listen: std::net::SocketAddr) -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(teachable_service::serve(listen))
}
