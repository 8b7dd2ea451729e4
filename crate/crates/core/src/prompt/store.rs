use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Condition;
use crate::geometry::validate_layout;
use crate::layout::{Layout, LayoutDocument};

pub const STORE_SCHEMA: &str = "roomweaver-store/1";
const MANIFEST: &str = "manifest.json";
const EXEMPLAR_DIR: &str = "exemplars";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("duplicate exemplar id {0:?}")]
    DuplicateId(String),
    #[error("exemplar id {0:?} must be non-empty and use only [A-Za-z0-9._-]")]
    InvalidId(String),
    #[error("exemplar {id:?} is marked {polarity:?} but {detail}")]
    PolarityMismatch { id: String, polarity: Polarity, detail: String },
}

/// A worked (condition, layout) example.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub id: String,
    pub condition: Condition,
    pub layout: Layout,
    pub polarity: Polarity,
}

/// Manifest row; carries what retrieval needs without opening layout files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub polarity: Polarity,
    pub room_type: String,
    pub length: f64,
    pub width: f64,
    pub box_count: usize,
    pub description: String,
    pub file: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema: String,
    tolerance: f64,
    exemplars: Vec<ManifestEntry>,
}

/// Insertion-ordered exemplar collection.
///
/// Positives must pass the bounds and overlap checks at the store's tolerance;
/// negatives must fail at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarStore {
    tolerance: f64,
    exemplars: Vec<Exemplar>,
}

fn io_err(path: &Path, e: impl ToString) -> StoreError {
    StoreError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

impl ExemplarStore {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, exemplars: Vec::new() }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn count(&self, polarity: Polarity) -> usize {
        self.exemplars.iter().filter(|e| e.polarity == polarity).count()
    }

    pub fn get(&self, id: &str) -> Option<&Exemplar> {
        self.exemplars.iter().find(|e| e.id == id)
    }

    pub fn insert(&mut self, exemplar: Exemplar) -> Result<(), StoreError> {
        if !valid_id(&exemplar.id) {
            return Err(StoreError::InvalidId(exemplar.id));
        }
        if self.get(&exemplar.id).is_some() {
            return Err(StoreError::DuplicateId(exemplar.id));
        }
        let violations = validate_layout(&exemplar.layout, self.tolerance);
        let detail = match (exemplar.polarity, violations.is_empty()) {
            (Polarity::Positive, false) => Some(format!("{} violation(s): {}", violations.len(), violations[0])),
            (Polarity::Negative, true) => Some("it passes every check".to_string()),
            _ => None,
        };
        if let Some(detail) = detail {
            return Err(StoreError::PolarityMismatch { id: exemplar.id, polarity: exemplar.polarity, detail });
        }
        self.exemplars.push(exemplar);
        Ok(())
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.exemplars
            .iter()
            .map(|e| ManifestEntry {
                id: e.id.clone(),
                polarity: e.polarity,
                room_type: e.condition.room_type().to_string(),
                length: e.condition.room.length(),
                width: e.condition.room.width(),
                box_count: e.layout.len(),
                description: e.condition.description.clone(),
                file: format!("{EXEMPLAR_DIR}/{}.json", e.id),
            })
            .collect()
    }

    /// Writes `manifest.json` plus one layout document per exemplar.
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        let sub = dir.join(EXEMPLAR_DIR);
        fs::create_dir_all(&sub).map_err(|e| io_err(&sub, e))?;
        for e in &self.exemplars {
            let mut doc = LayoutDocument::from_layout(&e.layout).with_scene_id(&e.id);
            doc.description = Some(e.condition.description.clone());
            let path = sub.join(format!("{}.json", e.id));
            fs::write(&path, doc.to_json()).map_err(|err| io_err(&path, err))?;
        }
        let manifest = Manifest { schema: STORE_SCHEMA.into(), tolerance: self.tolerance, exemplars: self.manifest() };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
        text.push('\n');
        let path = dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let schema_err = |path: &Path, detail: String| StoreError::Schema { path: path.display().to_string(), detail };
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| schema_err(&path, e.to_string()))?;
        if manifest.schema != STORE_SCHEMA {
            return Err(schema_err(&path, format!("unsupported schema {:?}", manifest.schema)));
        }
        let mut store = Self::new(manifest.tolerance);
        let mut seen = HashSet::new();
        for entry in manifest.exemplars {
            if !seen.insert(entry.id.clone()) {
                return Err(StoreError::DuplicateId(entry.id));
            }
            let file = dir.join(&entry.file);
            let text = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
            let doc: LayoutDocument = serde_json::from_str(&text).map_err(|e| schema_err(&file, e.to_string()))?;
            let layout = doc.to_layout().map_err(|e| schema_err(&file, e.to_string()))?;
            let description = doc.description.unwrap_or(entry.description);
            let condition = Condition::new(description, layout.room().clone());
            store.insert(Exemplar { id: entry.id, condition, layout, polarity: entry.polarity })?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{OrientedBox, RoomSpec};

    fn exemplar(id: &str, x: f64, polarity: Polarity) -> Exemplar {
        let room = RoomSpec::new("bedroom", 4.0, 4.0).unwrap();
        let layout =
            Layout::new(room.clone(), vec![OrientedBox::new("bed", [x, 2.0, 0.5], [1.0, 1.0, 2.0], 0.0).unwrap()])
                .unwrap();
        Exemplar { id: id.into(), condition: Condition::new(format!("text {id}"), room), layout, polarity }
    }

    #[test]
    fn polarity_is_enforced() {
        let mut store = ExemplarStore::new(0.01);
        store.insert(exemplar("ok", 2.0, Polarity::Positive)).unwrap();
        store.insert(exemplar("bad", 0.2, Polarity::Negative)).unwrap();
        assert!(matches!(
            store.insert(exemplar("liar", 0.2, Polarity::Positive)),
            Err(StoreError::PolarityMismatch { .. })
        ));
        assert!(matches!(
            store.insert(exemplar("clean", 2.0, Polarity::Negative)),
            Err(StoreError::PolarityMismatch { .. })
        ));
        assert!(matches!(store.insert(exemplar("ok", 2.5, Polarity::Positive)), Err(StoreError::DuplicateId(_))));
        assert!(matches!(store.insert(exemplar("../x", 2.5, Polarity::Positive)), Err(StoreError::InvalidId(_))));
        assert_eq!((store.count(Polarity::Positive), store.count(Polarity::Negative)), (1, 1));
    }

    #[test]
    fn save_load_round_trip() {
        let mut store = ExemplarStore::new(0.01);
        store.insert(exemplar("a", 2.0, Polarity::Positive)).unwrap();
        store.insert(exemplar("b", 0.1, Polarity::Negative)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        let first = fs::read(dir.path().join(MANIFEST)).unwrap();
        let loaded = ExemplarStore::load(dir.path()).unwrap();
        assert_eq!(loaded, store);
        loaded.save(dir.path()).unwrap();
        assert_eq!(fs::read(dir.path().join(MANIFEST)).unwrap(), first);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ExemplarStore::load(dir.path()), Err(StoreError::Io { .. })));
        fs::write(dir.path().join(MANIFEST), r#"{"schema":"other","tolerance":0.01,"exemplars":[]}"#).unwrap();
        assert!(matches!(ExemplarStore::load(dir.path()), Err(StoreError::Schema { .. })));
    }
}
