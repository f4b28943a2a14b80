//! Image records, scene-graph objects, area filtering and run sampling.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// A named object with an axis-aligned box in pixel coordinates.
///
/// `x`, `y` is the top-left corner; the box covers columns `x..x+w` and rows
/// `y..y+h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraphObject {
    pub name: String,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl SceneGraphObject {
    /// Clamp a raw (possibly out-of-frame) box into a `width` x `height` image.
    pub fn clamped(name: String, x: i64, y: i64, w: i64, h: i64, width: u32, height: u32) -> Self {
        let (x, w) = clamp_span(x, w, width);
        let (y, h) = clamp_span(y, h, height);
        Self { name, x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }
}

fn clamp_span(start: i64, len: i64, limit: u32) -> (u32, u32) {
    let limit = i64::from(limit);
    let lo = start.clamp(0, limit);
    let hi = start.saturating_add(len.max(0)).clamp(0, limit);
    (lo as u32, (hi - lo).max(0) as u32)
}

/// One image of the corpus with its (possibly empty) scene graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub path: String,
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneGraphObject>,
}

impl ImageRecord {
    pub fn pixel_area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }
}

/// Minimum object size, either relative to the image or in absolute pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaThreshold {
    Fraction(f64),
    Pixels(u64),
}

impl Default for AreaThreshold {
    fn default() -> Self {
        AreaThreshold::Fraction(0.02)
    }
}

impl AreaThreshold {
    pub fn admits(&self, object: &SceneGraphObject, record: &ImageRecord) -> bool {
        match *self {
            AreaThreshold::Fraction(min) => {
                let total = record.pixel_area();
                if total == 0 {
                    return false;
                }
                // w*h/(W*H) >= min, kept in floating point; both sides are exact
                // for any realistic image size.
                object.area() as f64 / total as f64 >= min
            }
            AreaThreshold::Pixels(min) => object.area() >= min,
        }
    }
}

/// Objects whose area fraction is at least `min_area_fraction`, in original order.
pub fn filter_objects(record: &ImageRecord, min_area_fraction: f64) -> Vec<SceneGraphObject> {
    filter_objects_by(record, AreaThreshold::Fraction(min_area_fraction))
}

pub fn filter_objects_by(record: &ImageRecord, threshold: AreaThreshold) -> Vec<SceneGraphObject> {
    record
        .objects
        .iter()
        .filter(|o| threshold.admits(o, record))
        .cloned()
        .collect()
}

/// Surviving objects that can actually be drawn (non-zero area).
pub fn drawable_objects(record: &ImageRecord, threshold: AreaThreshold) -> Vec<SceneGraphObject> {
    let mut kept = filter_objects_by(record, threshold);
    kept.retain(|o| o.area() > 0);
    kept
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Position in the plan; also the index into the prefix schedule.
    pub index: usize,
    pub image_id: String,
    /// Triplet slot `j` within the image.
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub entries: Vec<PlanEntry>,
    pub triplets_per_image: usize,
}

impl SamplingPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("not enough eligible images: requested {requested}, only {eligible} eligible (short by {})", requested - eligible)]
    Shortfall { requested: usize, eligible: usize },
    #[error("triplets_per_image must be at least 1")]
    ZeroTripletsPerImage,
}

#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub image_count: usize,
    pub triplets_per_image: usize,
    pub seed: u64,
    pub require_scene_graph: bool,
    pub threshold: AreaThreshold,
}

/// Draw `image_count` images uniformly without replacement from the eligible
/// part of the corpus and expand each into `triplets_per_image` slots.
///
/// Sampled images keep corpus order so the plan reads like the corpus.
pub fn build_sampling_plan(corpus: &[ImageRecord], req: &PlanRequest) -> Result<SamplingPlan, PlanError> {
    if req.triplets_per_image == 0 {
        return Err(PlanError::ZeroTripletsPerImage);
    }
    let eligible: Vec<usize> = corpus
        .iter()
        .enumerate()
        .filter(|(_, r)| !req.require_scene_graph || !drawable_objects(r, req.threshold).is_empty())
        .map(|(i, _)| i)
        .collect();
    if req.image_count > eligible.len() {
        return Err(PlanError::Shortfall {
            requested: req.image_count,
            eligible: eligible.len(),
        });
    }
    let mut rng = seed::rng(req.seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), req.image_count)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picked.sort_unstable();

    let mut entries = Vec::with_capacity(req.image_count * req.triplets_per_image);
    for corpus_idx in picked {
        for slot in 0..req.triplets_per_image {
            entries.push(PlanEntry {
                index: entries.len(),
                image_id: corpus[corpus_idx].id.clone(),
                slot,
            });
        }
    }
    Ok(SamplingPlan {
        entries,
        triplets_per_image: req.triplets_per_image,
    })
}
