//! Catalog retrieval, scene recentering and camera placement.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{normalize_category, Dims, Layout, OrientedBox, RoomSpec, Vec3};

pub const CATALOG_SCHEMA: &str = "roomweaver-catalog/1";
pub const SCENE_SCHEMA: &str = "roomweaver-scene/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssembleError {
    #[error("box {index}: category {category:?} is not in the catalog")]
    CategoryNotInCatalog { index: usize, category: String },
    #[error("{path}: {detail}")]
    Catalog { path: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub model_id: String,
    pub category: String,
    /// Canonical bounding box of the model, (w, h, d) in meters.
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_path: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    schema: String,
    models: Vec<CatalogEntry>,
}

/// Furniture models grouped by category, each group sorted by `model_id`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    by_category: BTreeMap<String, Vec<CatalogEntry>>,
}

impl Catalog {
    pub fn new(entries: impl IntoIterator<Item = CatalogEntry>) -> Result<Self, String> {
        let mut by_category: BTreeMap<String, Vec<CatalogEntry>> = BTreeMap::new();
        for mut entry in entries {
            let Some(category) = normalize_category(&entry.category) else {
                return Err(format!("model {:?} has invalid category {:?}", entry.model_id, entry.category));
            };
            let Dims { w, h, d } = entry.dims;
            if !(w > 0.0 && h > 0.0 && d > 0.0 && w.is_finite() && h.is_finite() && d.is_finite()) {
                return Err(format!("model {:?} has non-positive dims", entry.model_id));
            }
            entry.category = category.clone();
            by_category.entry(category).or_default().push(entry);
        }
        for list in by_category.values_mut() {
            list.sort_by(|a, b| a.model_id.cmp(&b.model_id));
            if let Some(pair) = list.windows(2).find(|p| p[0].model_id == p[1].model_id) {
                return Err(format!("duplicate model id {:?}", pair[0].model_id));
            }
        }
        Ok(Self { by_category })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: CatalogFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.schema != CATALOG_SCHEMA {
            return Err(format!("unsupported schema {:?}", file.schema));
        }
        Self::new(file.models)
    }

    pub fn load(path: &Path) -> Result<Self, AssembleError> {
        let err = |detail: String| AssembleError::Catalog { path: path.display().to_string(), detail };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json(&text).map_err(err)
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile { schema: CATALOG_SCHEMA.into(), models: self.entries().cloned().collect() };
        let mut text = serde_json::to_string_pretty(&file).expect("catalogs serialize");
        text.push('\n');
        text
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.by_category.values().flatten()
    }

    pub fn category(&self, category: &str) -> &[CatalogEntry] {
        self.by_category.get(category).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_category.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_category.is_empty()
    }
}

/// Nearest model of the box's category by Euclidean distance between (w, h, d)
/// triples. Equal distances resolve to the smallest `model_id`.
pub fn retrieve_model<'a>(b: &OrientedBox, catalog: &'a Catalog) -> Option<&'a CatalogEntry> {
    let size = b.size();
    let mut best: Option<(f64, &CatalogEntry)> = None;
    for entry in catalog.category(b.category()) {
        let d = size.distance(entry.dims);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, entry));
        }
    }
    best.map(|(_, e)| e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub vertical_fov: f64,
    pub image_size: [u32; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRing {
    pub count: usize,
    pub elevation_deg: f64,
    /// Ring radius as a multiple of the floor diagonal.
    pub radius_factor: f64,
    pub vertical_fov: f64,
    pub image_size: [u32; 2],
}

impl Default for CameraRing {
    fn default() -> Self {
        Self { count: 250, elevation_deg: 35.0, radius_factor: 1.5, vertical_fov: 60.0, image_size: [512, 512] }
    }
}

/// Evenly spaced poses on a horizontal ring around the recentered room, all
/// aimed at the origin with +z up.
pub fn sample_cameras(room: &RoomSpec, ring: &CameraRing) -> Vec<CameraPose> {
    let radius = ring.radius_factor * room.diagonal();
    let elevation = ring.elevation_deg.to_radians();
    let (height, horizontal) = (radius * elevation.sin(), radius * elevation.cos());
    (0..ring.count)
        .map(|i| {
            let azimuth = std::f64::consts::TAU * i as f64 / ring.count as f64;
            CameraPose {
                position: Vec3::new(horizontal * azimuth.cos(), horizontal * azimuth.sin(), height),
                look_at: Vec3::new(0.0, 0.0, 0.0),
                up: Vec3::new(0.0, 0.0, 1.0),
                vertical_fov: ring.vertical_fov,
                image_size: ring.image_size,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub model_id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset_path: Option<String>,
    /// Relative to the room center.
    pub position: Vec3,
    pub yaw: f64,
    pub fit_scale: [f64; 3],
    pub source_box: usize,
}

/// A layout populated with catalog models. The room spans
/// [-length/2, length/2] x [-width/2, width/2] after recentering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledScene {
    pub schema: String,
    pub room: RoomSpec,
    pub instances: Vec<Instance>,
    pub cameras: Vec<CameraPose>,
}

impl AssembledScene {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scenes serialize");
        text.push('\n');
        text
    }

    /// One camera per line: `px py pz lx ly lz fov`, six decimals.
    pub fn to_trajectory(&self) -> String {
        let mut out = String::new();
        for c in &self.cameras {
            let (p, l) = (c.position, c.look_at);
            let fields: Vec<String> =
                [p.x, p.y, p.z, l.x, l.y, l.z, c.vertical_fov].iter().map(|v| fixed(*v)).collect();
            writeln!(out, "{}", fields.join(" ")).unwrap();
        }
        out
    }
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssembleOptions {
    /// Scale each model so its canonical box matches the predicted size.
    pub fit_to_box: bool,
    pub cameras: Option<CameraRing>,
}

pub fn assemble(layout: &Layout, catalog: &Catalog, opts: &AssembleOptions) -> Result<AssembledScene, AssembleError> {
    let room = layout.room();
    let offset = Vec3::new(room.length() / 2.0, room.width() / 2.0, 0.0);
    let instances = layout
        .boxes()
        .iter()
        .enumerate()
        .map(|(index, b)| {
            let entry = retrieve_model(b, catalog)
                .ok_or_else(|| AssembleError::CategoryNotInCatalog { index, category: b.category().to_string() })?;
            let fit_scale = if opts.fit_to_box {
                let (s, m) = (b.size(), entry.dims);
                [s.w / m.w, s.h / m.h, s.d / m.d]
            } else {
                [1.0; 3]
            };
            Ok(Instance {
                model_id: entry.model_id.clone(),
                category: entry.category.clone(),
                asset_path: entry.asset_path.clone(),
                position: b.center() - offset,
                yaw: b.orientation_deg(),
                fit_scale,
                source_box: index,
            })
        })
        .collect::<Result<_, _>>()?;
    let cameras = opts.cameras.map(|ring| sample_cameras(room, &ring)).unwrap_or_default();
    Ok(AssembledScene { schema: SCENE_SCHEMA.into(), room: room.clone(), instances, cameras })
}
