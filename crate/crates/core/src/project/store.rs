use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{to_canonical_json, Project, ProjectError, PROJECT_VERSION};
use crate::ids::StateId;
use crate::vision::{decode_frame, encode_ppm, Frame, FrameFormat};

/// Frames keyed by their project-relative path.
pub type FrameStore = BTreeMap<String, Frame>;

/// Project-relative path of the `index`-th sample of `state`.
pub fn sample_path(state: &StateId, index: usize) -> String {
    format!("samples/{state}/{index:05}.ppm")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ProjectError + '_ {
    move |source| ProjectError::Io { path: path.display().to_string(), source }
}

/// Resolves `path` to the JSON file: a directory means `<dir>/project.json`.
fn document_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(super::PROJECT_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Validates `project` and writes it as canonical JSON.
pub fn save_project(project: &Project, path: &Path) -> Result<(), ProjectError> {
    project.validate()?;
    let json = to_canonical_json(project)?;
    let path = document_path(path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&path, json).map_err(io_err(&path))
}

/// Saves the document plus every manifest sample and template image beside it.
pub fn save_bundle(project: &Project, frames: &FrameStore, path: &Path) -> Result<(), ProjectError> {
    project.validate()?;
    let doc = document_path(path);
    let root = doc.parent().map(Path::to_path_buf).unwrap_or_default();
    let referenced = project
        .training_manifest
        .values()
        .flatten()
        .chain(project.settings.templates.iter().map(|t| &t.path));
    for rel in referenced {
        let frame = frames
            .get(rel)
            .ok_or_else(|| ProjectError::Sample { path: rel.clone(), message: "missing from frame store".into() })?;
        let target = root.join(rel);
        if let Some(dir) = target.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&target, encode_ppm(frame)).map_err(io_err(&target))?;
    }
    save_project(project, &doc)
}

/// Reads and fully validates a project document.
pub fn load_project(path: &Path) -> Result<Project, ProjectError> {
    let path = document_path(path);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    // check the version before the schema so future files fail clearly
    match raw.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == PROJECT_VERSION as u64 => {}
        Some(found) => return Err(ProjectError::VersionMismatch { found, expected: PROJECT_VERSION }),
        None => return Err(ProjectError::Validation(vec!["missing integer version".into()])),
    }
    let project: Project = serde_json::from_value(raw)?;
    project.validate()?;
    Ok(project)
}

/// Loads the document and every image it references.
pub fn load_bundle(path: &Path) -> Result<(Project, FrameStore), ProjectError> {
    let doc = document_path(path);
    let project = load_project(&doc)?;
    let root = doc.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut frames = FrameStore::new();
    let referenced = project
        .training_manifest
        .values()
        .flatten()
        .chain(project.settings.templates.iter().map(|t| &t.path));
    for rel in referenced {
        let file = root.join(rel);
        let bytes = fs::read(&file).map_err(io_err(&file))?;
        frames.insert(rel.clone(), read_image(rel, &bytes)?);
    }
    Ok((project, frames))
}

/// Decodes PNG or PPM by file extension.
pub fn read_image(name: &str, bytes: &[u8]) -> Result<Frame, ProjectError> {
    let format = if name.to_ascii_lowercase().ends_with(".png") { FrameFormat::Png } else { FrameFormat::PpmP6 };
    decode_frame(bytes, format).map_err(|e| ProjectError::Sample { path: name.into(), message: e.to_string() })
}
