//! Scene datasets in the interchange schema: loading, filtering, and exemplar
//! store construction.
//!
//! A dataset root holds one directory per split (`train`, `val`, `test`), each
//! containing one `roomweaver/1` JSON document per room. Files are read in
//! sorted order so every downstream artifact is reproducible.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::describer::{describe, paraphrase};
use crate::gateway::{Gateway, GatewayError};
use crate::geometry::{validate_layout, ViolationKind, DEFAULT_TOLERANCE};
use crate::layout::{Layout, LayoutDocument};
use crate::prompt::{Condition, Exemplar, ExemplarStore, Polarity, StoreError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {detail}")]
    Schema { path: String, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// A room read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub layout: Layout,
    pub rectangular_floor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub scenes: Vec<Scene>,
}

fn schema_err(path: &Path, detail: impl ToString) -> IngestError {
    IngestError::Schema { path: path.display().to_string(), detail: detail.to_string() }
}

fn read_scene(path: &Path) -> Result<(LayoutDocument, Layout), IngestError> {
    let text = fs::read_to_string(path).map_err(|e| schema_err(path, e))?;
    let doc: LayoutDocument = serde_json::from_str(&text).map_err(|e| schema_err(path, e))?;
    let layout = doc.to_layout().map_err(|e| schema_err(path, e))?;
    Ok((doc, layout))
}

/// Reads every `*.json` file directly under `root` and keeps rooms of
/// `room_type`. A document without `scene_id` takes its file stem.
pub fn load_scenes(root: &Path, room_type: &str) -> Result<Vec<Scene>, IngestError> {
    load_dir(root, Some(&room_type.to_lowercase()))
}

/// Like [`load_scenes`] without the room-type filter.
pub fn load_all_scenes(root: &Path) -> Result<Vec<Scene>, IngestError> {
    load_dir(root, None)
}

fn load_dir(root: &Path, wanted: Option<&str>) -> Result<Vec<Scene>, IngestError> {
    let entries = fs::read_dir(root).map_err(|e| schema_err(root, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let loaded: Vec<Option<Scene>> = paths
        .par_iter()
        .map(|path| {
            let (doc, layout) = read_scene(path)?;
            if wanted.is_some_and(|w| layout.room().room_type() != w) {
                return Ok(None);
            }
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Some(Scene { id: doc.scene_id.unwrap_or(stem), layout, rectangular_floor: doc.rectangular_floor }))
        })
        .collect::<Result<_, IngestError>>()?;
    let scenes: Vec<Scene> = loaded.into_iter().flatten().collect();
    let mut seen = HashSet::new();
    if let Some(dup) = scenes.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(schema_err(root, format!("duplicate scene id {:?}", dup.id)));
    }
    Ok(scenes)
}

pub fn load_split(root: &Path, name: SplitName, room_type: &str) -> Result<DatasetSplit, IngestError> {
    Ok(DatasetSplit { name, scenes: load_scenes(&root.join(name.as_str()), room_type)? })
}

/// Thresholds for [`preprocess`]. The object limit and whitelist are
/// configuration; the defaults approximate common 3D-FRONT bedroom setups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filters {
    pub rectangular_only: bool,
    pub max_objects: Option<usize>,
    pub whitelist: Option<BTreeSet<String>>,
    pub tolerance: f64,
}

impl Default for Filters {
    fn default() -> Self {
        Self { rectangular_only: true, max_objects: Some(13), whitelist: None, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    FloorPlan,
    TooManyObjects { count: usize, max: usize },
    Category { category: String },
    Oob { boxes: Vec<usize> },
    Overlap { boxes: Vec<usize> },
}

impl RejectReason {
    fn is_validity(&self) -> bool {
        matches!(self, RejectReason::Oob { .. } | RejectReason::Overlap { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub scene: Scene,
    pub reasons: Vec<RejectReason>,
}

impl Rejected {
    /// Only placement problems: usable as a negative exemplar.
    pub fn is_negative_candidate(&self) -> bool {
        !self.reasons.is_empty() && self.reasons.iter().all(RejectReason::is_validity)
    }
}

fn reasons(scene: &Scene, filters: &Filters) -> Vec<RejectReason> {
    let mut out = Vec::new();
    if filters.rectangular_only && !scene.rectangular_floor {
        out.push(RejectReason::FloorPlan);
    }
    let count = scene.layout.len();
    if let Some(max) = filters.max_objects.filter(|&max| count > max) {
        out.push(RejectReason::TooManyObjects { count, max });
    }
    if let Some(whitelist) = &filters.whitelist {
        let outside: BTreeSet<&str> =
            scene.layout.boxes().iter().map(|b| b.category()).filter(|c| !whitelist.contains(*c)).collect();
        out.extend(outside.into_iter().map(|c| RejectReason::Category { category: c.to_string() }));
    }
    let violations = validate_layout(&scene.layout, filters.tolerance);
    let collect = |kind: ViolationKind| -> Vec<usize> {
        let ids: BTreeSet<usize> =
            violations.iter().filter(|v| v.kind == kind).flat_map(|v| v.boxes.iter().copied()).collect();
        ids.into_iter().collect()
    };
    let oob = collect(ViolationKind::OutOfBounds);
    if !oob.is_empty() {
        out.push(RejectReason::Oob { boxes: oob });
    }
    let overlap = collect(ViolationKind::Overlap);
    if !overlap.is_empty() {
        out.push(RejectReason::Overlap { boxes: overlap });
    }
    out
}

/// Splits scenes into kept and rejected, recording every failed filter.
pub fn preprocess(scenes: Vec<Scene>, filters: &Filters) -> (Vec<Scene>, Vec<Rejected>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for scene in scenes {
        let reasons = reasons(&scene, filters);
        if reasons.is_empty() {
            kept.push(scene);
        } else {
            rejected.push(Rejected { scene, reasons });
        }
    }
    (kept, rejected)
}

#[derive(Default)]
pub struct StoreOptions<'a> {
    pub tolerance: f64,
    /// Rewrites template descriptions through the model when set.
    pub paraphrase: Option<&'a Gateway>,
}

impl StoreOptions<'_> {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, paraphrase: None }
    }
}

/// Kept scenes become positives; rejects that failed only placement checks
/// become negatives.
pub fn build_store(kept: &[Scene], rejected: &[Rejected], opts: &StoreOptions) -> Result<ExemplarStore, IngestError> {
    let mut store = ExemplarStore::new(opts.tolerance);
    let negatives = rejected.iter().filter(|r| r.is_negative_candidate()).map(|r| (&r.scene, Polarity::Negative));
    for (scene, polarity) in kept.iter().map(|s| (s, Polarity::Positive)).chain(negatives) {
        let description = paraphrase(&describe(&scene.layout), opts.paraphrase)?;
        store.insert(Exemplar {
            id: scene.id.clone(),
            condition: Condition::new(description.text(), scene.layout.room().clone()),
            layout: scene.layout.clone(),
            polarity,
        })?;
    }
    Ok(store)
}
