//! Deterministic synthetic corpora: small labeled image sets standing in for
//! webcam demonstrations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{StateId, StateSetId};
use crate::math::Vec3;
use crate::project::{AssetEntry, FrameStore, Project, ProjectError, DEFAULT_STATE_SET};
use crate::scene::{
    Anchor, AssetKind, Behavior, BehaviorRule, ObjectState, SceneObject, Snapshot, TargetProperty, Transform,
};
use crate::state_logic::{Action, StateSet, Trigger, TriggerBinding};
use crate::vision::{encode_ppm, Frame};

pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("bad corpus spec: {0}")]
    BadSpec(String),
    #[error("labels line {line}: {message}")]
    BadLabels { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Renderer {
    /// One color and shape per class, at random positions and sizes.
    ColoredShape,
    /// An orange handle on a gray track at evenly spaced positions.
    SliderPosition,
    /// Spatial relation between a red and a blue disc.
    TwoBlobRelationship,
}

impl Renderer {
    pub fn max_classes(self) -> usize {
        match self {
            Renderer::ColoredShape => PALETTE.len(),
            Renderer::SliderPosition => 12,
            Renderer::TwoBlobRelationship => RELATIONS.len(),
        }
    }

    /// State id of class `c`.
    pub fn state_id(self, c: usize) -> StateId {
        match self {
            Renderer::ColoredShape => StateId::new(format!("{}-{}", PALETTE[c].0, SHAPES[c % SHAPES.len()].name())),
            Renderer::SliderPosition => StateId::new(format!("pos{c}")),
            Renderer::TwoBlobRelationship => StateId::new(RELATIONS[c]),
        }
    }
}

impl fmt::Display for Renderer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Renderer::ColoredShape => "colored-shape",
            Renderer::SliderPosition => "slider-position",
            Renderer::TwoBlobRelationship => "two-blob-relationship",
        })
    }
}

impl FromStr for Renderer {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "colored-shape" => Ok(Renderer::ColoredShape),
            "slider-position" => Ok(Renderer::SliderPosition),
            "two-blob-relationship" => Ok(Renderer::TwoBlobRelationship),
            other => Err(CorpusError::BadSpec(format!("unknown renderer {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub renderer: Renderer,
    pub seed: u64,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

fn default_width() -> u32 {
    128
}

fn default_height() -> u32 {
    96
}

impl CorpusSpec {
    pub fn new(renderer: Renderer, classes: usize, samples_per_class: usize, seed: u64) -> Self {
        Self { classes, samples_per_class, renderer, seed, width: default_width(), height: default_height() }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let max = self.renderer.max_classes();
        let min = if self.renderer == Renderer::SliderPosition { 2 } else { 1 };
        if self.classes < min || self.classes > max {
            return Err(CorpusError::BadSpec(format!("{} supports {min}..={max} classes", self.renderer)));
        }
        if self.samples_per_class == 0 {
            return Err(CorpusError::BadSpec("samples per class must be positive".into()));
        }
        if self.width < 64 || self.height < 48 {
            return Err(CorpusError::BadSpec("frames must be at least 64x48".into()));
        }
        Ok(())
    }
}

const PALETTE: [(&str, [u8; 3]); 8] = [
    ("red", [220, 40, 40]),
    ("green", [40, 190, 60]),
    ("blue", [40, 70, 220]),
    ("yellow", [230, 210, 40]),
    ("magenta", [210, 50, 200]),
    ("cyan", [40, 200, 210]),
    ("white", [235, 235, 235]),
    ("purple", [120, 50, 170]),
];

pub const HANDLE_COLOR: [u8; 3] = [240, 120, 20];
const TRACK_COLOR: [u8; 3] = [170, 170, 170];
const RELATIONS: [&str; 5] = ["left-of", "right-of", "above", "below", "overlap"];

#[derive(Debug, Clone, Copy)]
enum Shape {
    Disc,
    Square,
    Triangle,
    Diamond,
    Ring,
}

const SHAPES: [Shape; 5] = [Shape::Disc, Shape::Square, Shape::Triangle, Shape::Diamond, Shape::Ring];

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Disc => "disc",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
            Shape::Diamond => "diamond",
            Shape::Ring => "ring",
        }
    }

    /// Whether offset `(dx, dy)` from the center lies inside a shape of radius `r`.
    fn contains(self, dx: f64, dy: f64, r: f64) -> bool {
        match self {
            Shape::Disc => dx * dx + dy * dy <= r * r,
            Shape::Square => dx.abs() <= r * 0.85 && dy.abs() <= r * 0.85,
            Shape::Triangle => dy <= r * 0.8 && dy >= -r && dx.abs() <= (dy + r) * 0.55,
            Shape::Diamond => dx.abs() + dy.abs() <= r,
            Shape::Ring => {
                let d2 = dx * dx + dy * dy;
                d2 <= r * r && d2 >= (0.55 * r) * (0.55 * r)
            }
        }
    }
}

/// Horizontal handle center of slider class `c` out of `k`.
pub fn slider_offset(width: u32, c: usize, k: usize) -> f64 {
    let (x0, x1) = slider_track(width);
    x0 + c as f64 * (x1 - x0) / (k - 1) as f64
}

fn slider_track(width: u32) -> (f64, f64) {
    (14.0, width as f64 - 15.0)
}

fn jitter(rgb: [u8; 3], rng: &mut impl Rng, amp: i32) -> [u8; 3] {
    rgb.map(|v| (v as i32 + rng.random_range(-amp..=amp)).clamp(0, 255) as u8)
}

/// Renders one sample of class `c` of `k`, drawing randomness from `rng`.
pub fn render(renderer: Renderer, c: usize, k: usize, width: u32, height: u32, rng: &mut impl Rng) -> Frame {
    let bg_level = rng.random_range(30..70u8);
    let bg = [bg_level, bg_level, bg_level.saturating_add(8)];
    let (w, h) = (width as f64, height as f64);
    let mut paint: Vec<(Shape, f64, f64, f64, [u8; 3])> = Vec::new();
    match renderer {
        Renderer::ColoredShape => {
            let r = rng.random_range(14.0..22.0);
            let cx = rng.random_range(r..w - r);
            let cy = rng.random_range(r..h - r);
            paint.push((SHAPES[c % SHAPES.len()], cx, cy, r, PALETTE[c].1));
        }
        Renderer::SliderPosition => {}
        Renderer::TwoBlobRelationship => {
            let r = 10.0;
            let (d, dir): (f64, (f64, f64)) = match RELATIONS[c] {
                "left-of" => (rng.random_range(30.0..45.0), (1.0, 0.0)),
                "right-of" => (rng.random_range(30.0..45.0), (-1.0, 0.0)),
                "above" => (rng.random_range(28.0..34.0), (0.0, 1.0)),
                "below" => (rng.random_range(28.0..34.0), (0.0, -1.0)),
                _ => (rng.random_range(0.0..8.0), (1.0, 0.0)),
            };
            // red at (cx, cy); blue displaced by d along dir, both fully inside
            let (ox, oy) = (dir.0 * d, dir.1 * d);
            let cx = rng.random_range((r - ox.min(0.0))..(w - r - ox.max(0.0)));
            let cy = rng.random_range((r - oy.min(0.0))..(h - r - oy.max(0.0)));
            paint.push((Shape::Disc, cx, cy, r, [220, 40, 40]));
            paint.push((Shape::Disc, cx + ox, cy + oy, r, [40, 70, 220]));
        }
    }
    let (slider_x, slider_y) = if renderer == Renderer::SliderPosition {
        (slider_offset(width, c, k) + rng.random_range(-1.5..1.5), h / 2.0 + rng.random_range(-1.0..1.0))
    } else {
        (0.0, 0.0)
    };
    let (track0, track1) = slider_track(width);

    Frame::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let mut rgb = bg;
        if renderer == Renderer::SliderPosition {
            if (py - h / 2.0).abs() <= 3.0 && px >= track0 - 4.0 && px <= track1 + 4.0 {
                rgb = TRACK_COLOR;
            }
            if (px - slider_x).abs() <= 7.0 && (py - slider_y).abs() <= 9.0 {
                rgb = HANDLE_COLOR;
            }
        }
        for &(shape, cx, cy, r, color) in &paint {
            if shape.contains(px - cx, py - cy, r) {
                rgb = color;
            }
        }
        jitter(rgb, rng, 10)
    })
    .expect("corpus frames are non-empty")
}

/// One generated image and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    /// Path relative to the corpus directory.
    pub path: String,
    pub state_id: StateId,
    pub frame: Frame,
}

/// All samples of `spec`, class-major, in a fixed order.
pub fn generate(spec: &CorpusSpec) -> Result<Vec<LabeledFrame>, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.classes * spec.samples_per_class);
    for c in 0..spec.classes {
        let state_id = spec.renderer.state_id(c);
        for i in 0..spec.samples_per_class {
            let frame = render(spec.renderer, c, spec.classes, spec.width, spec.height, &mut rng);
            out.push(LabeledFrame { path: format!("{state_id}/{i:05}.ppm"), state_id: state_id.clone(), frame });
        }
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

/// Writes `samples` as PPM files plus the labels file under `dir`.
pub fn write_corpus(samples: &[LabeledFrame], dir: &Path) -> Result<PathBuf, CorpusError> {
    let mut labels = String::new();
    for s in samples {
        let file = dir.join(&s.path);
        if let Some(parent) = file.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&file, encode_ppm(&s.frame)).map_err(io_err(&file))?;
        labels.push_str(&format!("{},{}\n", s.path, s.state_id));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let labels_path = dir.join(LABELS_FILE);
    fs::write(&labels_path, labels).map_err(io_err(&labels_path))?;
    Ok(labels_path)
}

/// Parses `path,stateId` lines; blank lines and `#` comments are skipped.
pub fn parse_labels(text: &str) -> Result<Vec<(String, StateId)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (path, state) = line
            .rsplit_once(',')
            .ok_or_else(|| CorpusError::BadLabels { line: i + 1, message: "expected path,stateId".into() })?;
        let (path, state) = (path.trim(), state.trim());
        if path.is_empty() || state.is_empty() {
            return Err(CorpusError::BadLabels { line: i + 1, message: "empty field".into() });
        }
        out.push((path.to_owned(), StateId::new(state)));
    }
    Ok(out)
}

/// A ready-to-train project over `samples`: one state per label in first-seen
/// order, a marker object whose keyed scene for the `c`-th state sits
/// `0.1 * c` meters right of the screen center at 1 m, and a chime on
/// entering the first state. Slider corpora become a continuous set whose
/// parameter also drives the marker's scale.
pub fn demo_project(renderer: Renderer, samples: &[LabeledFrame]) -> Result<(Project, FrameStore), ProjectError> {
    let mut project = Project::new(format!("{renderer} demo"));
    let continuous = renderer == Renderer::SliderPosition;
    let set_id = StateSetId::new(if continuous { "slider" } else { DEFAULT_STATE_SET });
    if continuous {
        project.state_sets.push(StateSet::continuous(set_id.clone(), 0.0, 1.0));
    }
    let mut frames = FrameStore::new();
    for s in samples {
        if !project.has_state(&s.state_id) {
            project.add_state(&set_id, s.state_id.clone(), s.state_id.as_str())?;
        }
        project.add_sample(&s.state_id, s.frame.clone(), &mut frames)?;
    }
    let assets = &mut project.settings.assets;
    assets.insert("marker".into(), AssetEntry { kind: AssetKind::Model3d, uri: "marker.glb".into() });
    assets.insert("chime".into(), AssetEntry { kind: AssetKind::Audio, uri: "chime.wav".into() });
    project.scene_objects.push(SceneObject::new(
        "marker",
        "marker",
        AssetKind::Model3d,
        Anchor::Camera { x: 0.5, y: 0.5, depth: 1.0 },
    ));
    for (c, state) in project.state_ids().into_iter().enumerate() {
        let at = ObjectState::visible_at(Transform::at(Vec3::new(0.1 * c as f64, 0.0, 0.0)));
        project.save_keyed_scene(&state, Snapshot::new().with("marker", at))?;
    }
    if let Some(first) = project.state_ids().first().cloned() {
        project.bindings.push(TriggerBinding::new(
            Trigger::Enter { state: first },
            vec![Action::PlayAudio { asset_id: "chime".into() }],
        ));
    }
    if continuous {
        let rule = BehaviorRule::ParamBinding { parameter: set_id, target: TargetProperty::ScaleUniform, a: 1.0, b: 0.5 };
        project.behaviors.push(Behavior::new("grow", "marker", rule));
    }
    project.validate()?;
    Ok((project, frames))
}
