//! Value types for rooms, oriented boxes and layouts, plus the `roomweaver/1`
//! interchange document.
//!
//! Floor-plane convention: the room occupies `[0, length] x [0, width]`, `x`
//! runs along the room length, `y` along the width and `z` is vertical. The
//! canonical top-down view renders `+y` upward, so "top-left" means small `x`
//! and large `y`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema tag written into every layout interchange document.
pub const LAYOUT_SCHEMA: &str = "roomweaver/1";

/// Wall height used when a room does not specify one.
pub const DEFAULT_ROOM_HEIGHT: f64 = 2.8;

/// Objects may sink at most this far below the floor (meters).
pub const FLOOR_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("invalid category {0:?}")]
    InvalidCategory(String),
    #[error("box size must be positive and finite, got {0:?}")]
    InvalidSize([f64; 3]),
    #[error("box center must be finite, got {0:?}")]
    InvalidCenter([f64; 3]),
    #[error("box rests below the floor: center z {z}, height {height}")]
    BelowFloor { z: f64, height: f64 },
    #[error("orientation must be finite, got {0}")]
    InvalidOrientation(f64),
    #[error("room dimensions must be positive and finite: length {length}, width {width}, height {height}")]
    InvalidRoom { length: f64, width: f64, height: f64 },
    #[error("boxes {0} and {1} are identical")]
    DuplicateBox(usize, usize),
    #[error("unsupported schema {0:?}, expected {LAYOUT_SCHEMA:?}")]
    Schema(String),
}

/// Point or vector in room coordinates (meters). Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;

    fn sub(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Box extents `(w, h, d)`: along local x, vertical, along local y.
/// Serialized as `[w, h, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Dims {
    pub w: f64,
    pub h: f64,
    pub d: f64,
}

impl Dims {
    pub const fn new(w: f64, h: f64, d: f64) -> Self {
        Self { w, h, d }
    }

    pub fn volume(self) -> f64 {
        self.w * self.h * self.d
    }

    /// Euclidean distance between two extent triples.
    pub fn distance(self, other: Dims) -> f64 {
        let (dw, dh, dd) = (self.w - other.w, self.h - other.h, self.d - other.d);
        (dw * dw + dh * dh + dd * dd).sqrt()
    }

    pub(crate) fn is_valid(self) -> bool {
        [self.w, self.h, self.d].iter().all(|v| v.is_finite() && *v > 0.0)
    }
}

impl From<[f64; 3]> for Dims {
    fn from([w, h, d]: [f64; 3]) -> Self {
        Self { w, h, d }
    }
}

impl From<Dims> for [f64; 3] {
    fn from(v: Dims) -> Self {
        [v.w, v.h, v.d]
    }
}

/// Normalizes a free-form category name: lowercase, hyphens and underscores
/// kept apart, runs of whitespace or hyphens collapsed to a single space.
///
/// Returns `None` when nothing usable remains or the name carries characters
/// that cannot appear in a layout selector.
pub fn normalize_category(raw: &str) -> Option<String> {
    let lowered = raw.to_lowercase();
    let words: Vec<&str> = lowered.split(|c: char| c.is_whitespace() || c == '-').filter(|w| !w.is_empty()).collect();
    if words.is_empty() {
        return None;
    }
    let ok = words.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'));
    ok.then(|| words.join(" "))
}

/// One furnished object: category, center, extents and yaw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct OrientedBox {
    category: String,
    center: Vec3,
    size: Dims,
    orientation_deg: f64,
}

impl OrientedBox {
    pub fn new(
        category: &str,
        center: impl Into<Vec3>,
        size: impl Into<Dims>,
        orientation_deg: f64,
    ) -> Result<Self, LayoutError> {
        let category =
            normalize_category(category).ok_or_else(|| LayoutError::InvalidCategory(category.to_string()))?;
        let center = center.into();
        let size = size.into();
        if !center.is_finite() {
            return Err(LayoutError::InvalidCenter(center.into()));
        }
        if !size.is_valid() {
            return Err(LayoutError::InvalidSize(size.into()));
        }
        if center.z < 0.0 || center.z - size.h / 2.0 < -FLOOR_EPSILON {
            return Err(LayoutError::BelowFloor { z: center.z, height: size.h });
        }
        if !orientation_deg.is_finite() {
            return Err(LayoutError::InvalidOrientation(orientation_deg));
        }
        Ok(Self { category, center, size, orientation_deg: normalize_degrees(orientation_deg) })
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn size(&self) -> Dims {
        self.size
    }

    /// Yaw about the vertical axis in `[0, 360)`.
    pub fn orientation_deg(&self) -> f64 {
        self.orientation_deg
    }

    pub fn volume(&self) -> f64 {
        self.size.volume()
    }

    /// Vertical extent `[bottom, top]`.
    pub fn z_range(&self) -> (f64, f64) {
        (self.center.z - self.size.h / 2.0, self.center.z + self.size.h / 2.0)
    }

    /// Same box moved so that its center is `center`.
    pub fn with_center(&self, center: Vec3) -> Result<Self, LayoutError> {
        Self::new(&self.category, center, self.size, self.orientation_deg)
    }

    /// Same box with a new yaw.
    pub fn with_orientation(&self, orientation_deg: f64) -> Result<Self, LayoutError> {
        Self::new(&self.category, self.center, self.size, orientation_deg)
    }

    fn bits(&self) -> (&str, [u64; 7]) {
        let c = self.center;
        let s = self.size;
        (&self.category, [c.x, c.y, c.z, s.w, s.h, s.d, self.orientation_deg].map(f64::to_bits))
    }
}

/// Maps any finite angle into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 || r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    category: String,
    center: [f64; 3],
    size: [f64; 3],
    orientation: f64,
}

impl TryFrom<RawBox> for OrientedBox {
    type Error = LayoutError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        OrientedBox::new(&raw.category, raw.center, raw.size, raw.orientation)
    }
}

impl From<OrientedBox> for RawBox {
    fn from(b: OrientedBox) -> Self {
        RawBox { category: b.category, center: b.center.into(), size: b.size.into(), orientation: b.orientation_deg }
    }
}

/// Room type plus rectangular floor dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRoom", into = "RawRoom")]
pub struct RoomSpec {
    room_type: String,
    length: f64,
    width: f64,
    height: f64,
}

impl RoomSpec {
    pub fn new(room_type: &str, length: f64, width: f64) -> Result<Self, LayoutError> {
        Self::with_height(room_type, length, width, DEFAULT_ROOM_HEIGHT)
    }

    pub fn with_height(room_type: &str, length: f64, width: f64, height: f64) -> Result<Self, LayoutError> {
        let valid = |v: f64| v.is_finite() && v > 0.0;
        if !(valid(length) && valid(width) && valid(height)) {
            return Err(LayoutError::InvalidRoom { length, width, height });
        }
        Ok(Self { room_type: room_type.trim().to_lowercase(), length, width, height })
    }

    pub fn room_type(&self) -> &str {
        &self.room_type
    }

    /// Extent along x.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Extent along y.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Floor diagonal.
    pub fn diagonal(&self) -> f64 {
        self.length.hypot(self.width)
    }
}

#[derive(Serialize, Deserialize)]
struct RawRoom {
    #[serde(rename = "type")]
    room_type: String,
    length: f64,
    width: f64,
    #[serde(default = "default_height")]
    height: f64,
}

fn default_height() -> f64 {
    DEFAULT_ROOM_HEIGHT
}

impl TryFrom<RawRoom> for RoomSpec {
    type Error = LayoutError;

    fn try_from(raw: RawRoom) -> Result<Self, Self::Error> {
        RoomSpec::with_height(&raw.room_type, raw.length, raw.width, raw.height)
    }
}

impl From<RoomSpec> for RawRoom {
    fn from(r: RoomSpec) -> Self {
        RawRoom { room_type: r.room_type, length: r.length, width: r.width, height: r.height }
    }
}

/// A room and its ordered set of boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    room: RoomSpec,
    boxes: Vec<OrientedBox>,
}

impl Layout {
    pub fn new(room: RoomSpec, boxes: Vec<OrientedBox>) -> Result<Self, LayoutError> {
        let mut keys: Vec<_> = boxes.iter().enumerate().map(|(i, b)| (b.bits(), i)).collect();
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0].0 == w[1].0) {
            let (a, b) = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
            return Err(LayoutError::DuplicateBox(a, b));
        }
        Ok(Self { room, boxes })
    }

    pub fn empty(room: RoomSpec) -> Self {
        Self { room, boxes: Vec::new() }
    }

    pub fn room(&self) -> &RoomSpec {
        &self.room
    }

    pub fn boxes(&self) -> &[OrientedBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn into_parts(self) -> (RoomSpec, Vec<OrientedBox>) {
        (self.room, self.boxes)
    }
}

/// On-disk / on-wire form of a layout.
///
/// `scene_id`, `description` and `rectangular_floor` are optional extras used
/// by dataset files; plain layouts omit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_id: Option<String>,
    pub room: RoomSpec,
    pub boxes: Vec<OrientedBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub rectangular_floor: bool,
}

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

impl LayoutDocument {
    pub fn from_layout(layout: &Layout) -> Self {
        Self {
            schema: LAYOUT_SCHEMA.to_string(),
            scene_id: None,
            room: layout.room.clone(),
            boxes: layout.boxes.clone(),
            description: None,
            rectangular_floor: true,
        }
    }

    pub fn with_scene_id(mut self, id: impl Into<String>) -> Self {
        self.scene_id = Some(id.into());
        self
    }

    pub fn to_layout(&self) -> Result<Layout, LayoutError> {
        if self.schema != LAYOUT_SCHEMA {
            return Err(LayoutError::Schema(self.schema.clone()));
        }
        Layout::new(self.room.clone(), self.boxes.clone())
    }

    /// Pretty JSON with a trailing newline. Deterministic for equal documents.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("layout documents always serialize");
        s.push('\n');
        s
    }
}

impl fmt::Display for OrientedBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} @ ({:.2}, {:.2}, {:.2}) size ({:.2}, {:.2}, {:.2}) yaw {:.1}",
            self.category,
            self.center.x,
            self.center.y,
            self.center.z,
            self.size.w,
            self.size.h,
            self.size.d,
            self.orientation_deg
        )
    }
}
