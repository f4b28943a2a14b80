//! Corpus ingestion: an image directory plus a scene-graph document keyed by
//! image id.
//!
//! The scene-graph document is a JSON (or YAML) map from image id to
//! `{width, height, objects}`. `objects` may be a list of `{name, x, y, w, h}`
//! or a GQA-style map from object id to the same fields; any other object
//! fields (attributes, relations) are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;
use vqanle_core::scene::{ImageRecord, SceneGraphObject};

pub const IMAGE_EXTENSIONS: [&str; 4] = ["jpg", "jpeg", "png", "JPG"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("image directory {0} does not exist")]
    MissingImageDir(PathBuf),
    #[error("scene graph {path}: {message}")]
    SceneGraph { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Problem with one image; the record is left out of the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub image_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    /// Sorted by id.
    pub records: Vec<ImageRecord>,
    pub errors: Vec<RecordError>,
    /// Malformed scene-graph objects that were skipped.
    pub skipped_objects: usize,
}

impl LoadedCorpus {
    pub fn get(&self, id: &str) -> Option<&ImageRecord> {
        self.records.binary_search_by(|r| r.id.as_str().cmp(id)).ok().map(|i| &self.records[i])
    }
}

#[derive(Debug, Deserialize)]
struct GraphEntry {
    width: Option<u32>,
    height: Option<u32>,
    #[serde(default)]
    objects: Value,
    /// File name relative to the image directory when it is not `<id>.<ext>`.
    #[serde(default)]
    file: Option<String>,
}

fn parse_object(v: &Value, width: u32, height: u32) -> Option<SceneGraphObject> {
    let name = v.get("name")?.as_str()?.trim();
    if name.is_empty() {
        return None;
    }
    let num = |k: &str| v.get(k).and_then(|n| n.as_i64().or_else(|| n.as_f64().map(|f| f.round() as i64)));
    let (x, y, w, h) = (num("x")?, num("y")?, num("w")?, num("h")?);
    if w < 0 || h < 0 {
        return None;
    }
    Some(SceneGraphObject::clamped(name.to_string(), x, y, w, h, width, height))
}

/// Objects of one entry; malformed ones are skipped with a warning.
fn parse_objects(id: &str, objects: &Value, width: u32, height: u32, skipped: &mut usize) -> Vec<SceneGraphObject> {
    let items: Vec<(String, &Value)> = match objects {
        Value::Null => Vec::new(),
        Value::Array(a) => a.iter().enumerate().map(|(i, v)| (i.to_string(), v)).collect(),
        // GQA object ids are numeric strings; sort numerically where possible
        // so object order does not depend on map iteration.
        Value::Object(m) => {
            let mut v: Vec<(String, &Value)> = m.iter().map(|(k, v)| (k.clone(), v)).collect();
            v.sort_by(|a, b| match (a.0.parse::<u64>(), b.0.parse::<u64>()) {
                (Ok(x), Ok(y)) => x.cmp(&y),
                _ => a.0.cmp(&b.0),
            });
            v
        }
        other => {
            warn!("image {id}: objects must be a list or map, got {other}");
            *skipped += 1;
            return Vec::new();
        }
    };
    let mut out = Vec::with_capacity(items.len());
    for (key, v) in items {
        match parse_object(v, width, height) {
            Some(o) => out.push(o),
            None => {
                warn!("image {id}: skipping malformed object {key}: {v}");
                *skipped += 1;
            }
        }
    }
    out
}

pub fn find_image(dir: &Path, id: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS.iter().map(|ext| dir.join(format!("{id}.{ext}"))).find(|p| p.is_file())
}

pub fn read_scene_graph(path: &Path) -> Result<BTreeMap<String, Value>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => CorpusError::SceneGraph { path: path.into(), message: "file not found".into() },
        _ => CorpusError::Io { path: path.into(), source },
    })?;
    let is_yaml = matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml"));
    let parsed: Result<BTreeMap<String, Value>, String> = if is_yaml {
        serde_yaml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| CorpusError::SceneGraph { path: path.into(), message })
}

/// Load every image in `images_dir`, attaching scene-graph objects when the
/// graph has an entry for it. Images named only in the scene graph and missing
/// on disk become record errors.
pub fn load_corpus(images_dir: &Path, scene_graph: Option<&Path>) -> Result<LoadedCorpus, CorpusError> {
    if !images_dir.is_dir() {
        return Err(CorpusError::MissingImageDir(images_dir.into()));
    }
    let graph = match scene_graph {
        Some(p) => read_scene_graph(p)?,
        None => BTreeMap::new(),
    };

    let mut on_disk: BTreeMap<String, PathBuf> = BTreeMap::new();
    let entries = fs::read_dir(images_dir).map_err(|source| CorpusError::Io { path: images_dir.into(), source })?;
    for entry in entries {
        let path = entry.map_err(|source| CorpusError::Io { path: images_dir.into(), source })?.path();
        let ext_ok = path.extension().and_then(|e| e.to_str()).is_some_and(|e| IMAGE_EXTENSIONS.contains(&e));
        if let (true, Some(stem)) = (ext_ok && path.is_file(), path.file_stem().and_then(|s| s.to_str())) {
            on_disk.entry(stem.to_string()).or_insert(path);
        }
    }

    let mut ids: Vec<String> = on_disk.keys().chain(graph.keys()).cloned().collect();
    ids.sort();
    ids.dedup();

    let mut corpus = LoadedCorpus::default();
    for id in ids {
        let entry = match graph.get(&id) {
            Some(v) => match GraphEntry::deserialize(v) {
                Ok(e) => Some(e),
                Err(e) => {
                    corpus.errors.push(RecordError { image_id: id, message: format!("bad scene-graph entry: {e}") });
                    continue;
                }
            },
            None => None,
        };
        let path = match entry.as_ref().and_then(|e| e.file.as_deref()) {
            Some(f) => Some(images_dir.join(f)).filter(|p| p.is_file()),
            None => on_disk.get(&id).cloned().or_else(|| find_image(images_dir, &id)),
        };
        let Some(path) = path else {
            corpus.errors.push(RecordError { image_id: id.clone(), message: format!("no image file for {id} in {}", images_dir.display()) });
            continue;
        };
        let dims = match entry.as_ref().and_then(|e| e.width.zip(e.height)) {
            Some(d) => Ok(d),
            None => image::image_dimensions(&path).map_err(|e| e.to_string()),
        };
        let (width, height) = match dims {
            Ok((w, h)) if w > 0 && h > 0 => (w, h),
            Ok(_) => {
                corpus.errors.push(RecordError { image_id: id, message: "image has zero width or height".into() });
                continue;
            }
            Err(e) => {
                corpus.errors.push(RecordError { image_id: id, message: format!("cannot read image size: {e}") });
                continue;
            }
        };
        let objects = match &entry {
            Some(e) => parse_objects(&id, &e.objects, width, height, &mut corpus.skipped_objects),
            None => Vec::new(),
        };
        corpus.records.push(ImageRecord { id, path: path.to_string_lossy().into_owned(), width, height, objects });
    }
    Ok(corpus)
}
