//! Geometry of yaw-rotated boxes: floor footprints, exact 3D IoU via convex
//! polygon clipping, bounds and overlap checks, and the 3x3 canonical grid.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::layout::{Layout, OrientedBox, RoomSpec};

/// Default tolerance for bounds and overlap checks (meters).
pub const DEFAULT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// The four footprint corners in counter-clockwise order.
///
/// Corner `i` is the center plus the local offset
/// `(-w/2,-d/2), (w/2,-d/2), (w/2,d/2), (-w/2,d/2)` rotated by the yaw.
pub fn footprint_polygon(b: &OrientedBox) -> [Point2; 4] {
    let c = b.center();
    let s = b.size();
    let (sin, cos) = b.orientation_deg().to_radians().sin_cos();
    let (hw, hd) = (s.w / 2.0, s.d / 2.0);
    [(-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)]
        .map(|(lx, ly)| Point2::new(c.x + lx * cos - ly * sin, c.y + lx * sin + ly * cos))
}

/// Shoelace area of a simple polygon (positive for counter-clockwise).
pub fn polygon_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, p) in poly.iter().enumerate() {
        let q = poly[(i + 1) % poly.len()];
        acc += p.x * q.y - q.x * p.y;
    }
    acc / 2.0
}

/// Sutherland-Hodgman clipping of `subject` against the convex,
/// counter-clockwise polygon `clip`.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut output = subject.to_vec();
    for (i, &a) in clip.iter().enumerate() {
        if output.is_empty() {
            break;
        }
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        for (j, &p) in input.iter().enumerate() {
            let q = input[(j + 1) % input.len()];
            let (dp, dq) = (cross(a, b, p), cross(a, b, q));
            if dp >= 0.0 {
                output.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                output.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    output
}

fn geometry_key(b: &OrientedBox) -> [f64; 7] {
    let c = b.center();
    let s = b.size();
    [c.x, c.y, c.z, s.w, s.h, s.d, b.orientation_deg()]
}

fn cmp_geometry(a: &OrientedBox, b: &OrientedBox) -> Ordering {
    geometry_key(a)
        .iter()
        .zip(geometry_key(b).iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn interval_overlap((a0, a1): (f64, f64), (b0, b1): (f64, f64)) -> f64 {
    a1.min(b1) - a0.max(b0)
}

/// Volume shared by two boxes. Exact up to floating-point rounding, and
/// bit-symmetric in its arguments.
pub fn intersection_volume(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let dz = interval_overlap(a.z_range(), b.z_range());
    if dz <= 0.0 {
        return 0.0;
    }
    // clip in a canonical order so that swapping arguments is bit-identical
    let (first, second) = match cmp_geometry(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let area = polygon_area(&clip_convex(&footprint_polygon(first), &footprint_polygon(second)));
    (area.max(0.0) * dz).min(a.volume().min(b.volume()))
}

/// 3D intersection-over-union of two yaw-rotated boxes, in `[0, 1]`.
pub fn box_iou_3d(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if cmp_geometry(a, b) == Ordering::Equal {
        return 1.0;
    }
    let inter = intersection_volume(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.volume() + b.volume() - inter)).clamp(0.0, 1.0)
}

/// True iff some footprint corner lies outside the floor rectangle grown by `tol`.
pub fn out_of_bounds(b: &OrientedBox, room: &RoomSpec, tol: f64) -> bool {
    footprint_polygon(b)
        .iter()
        .any(|p| p.x < -tol || p.x > room.length() + tol || p.y < -tol || p.y > room.width() + tol)
}

fn project(poly: &[Point2; 4], ax: f64, ay: f64) -> (f64, f64) {
    poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.x * ax + p.y * ay;
        (lo.min(d), hi.max(d))
    })
}

/// Separating-axis overlap test.
///
/// The boxes overlap iff their penetration exceeds `tol` on every candidate
/// axis: the two edge normals of each footprint and the vertical axis. Boxes
/// in exact contact never overlap.
pub fn boxes_overlap(a: &OrientedBox, b: &OrientedBox, tol: f64) -> bool {
    if interval_overlap(a.z_range(), b.z_range()) <= tol {
        return false;
    }
    let (pa, pb) = (footprint_polygon(a), footprint_polygon(b));
    for poly in [&pa, &pb] {
        for i in 0..2 {
            let (p, q) = (poly[i], poly[i + 1]);
            let (ex, ey) = (q.x - p.x, q.y - p.y);
            let len = ex.hypot(ey);
            let (ax, ay) = (-ey / len, ex / len);
            if interval_overlap(project(&pa, ax, ay), project(&pb, ax, ay)) <= tol {
                return false;
            }
        }
    }
    true
}

/// One of the nine cells of the canonical 3x3 floor grid. Row 0 is the far
/// ("top") wall at large `y`; column 0 is the left wall at small `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridCell {
    TopLeft,
    TopCenter,
    TopRight,
    MiddleLeft,
    Center,
    MiddleRight,
    BottomLeft,
    BottomCenter,
    BottomRight,
}

impl GridCell {
    pub const ALL: [GridCell; 9] = [
        GridCell::TopLeft,
        GridCell::TopCenter,
        GridCell::TopRight,
        GridCell::MiddleLeft,
        GridCell::Center,
        GridCell::MiddleRight,
        GridCell::BottomLeft,
        GridCell::BottomCenter,
        GridCell::BottomRight,
    ];

    /// Panics if `row` or `col` exceeds 2.
    pub fn from_row_col(row: usize, col: usize) -> GridCell {
        assert!(row < 3 && col < 3, "grid index out of range: ({row}, {col})");
        Self::ALL[row * 3 + col]
    }

    pub fn row(self) -> usize {
        self as usize / 3
    }

    pub fn col(self) -> usize {
        self as usize % 3
    }

    pub fn name(self) -> &'static str {
        match self {
            GridCell::TopLeft => "top-left",
            GridCell::TopCenter => "top-center",
            GridCell::TopRight => "top-right",
            GridCell::MiddleLeft => "middle-left",
            GridCell::Center => "center",
            GridCell::MiddleRight => "middle-right",
            GridCell::BottomLeft => "bottom-left",
            GridCell::BottomCenter => "bottom-center",
            GridCell::BottomRight => "bottom-right",
        }
    }

    pub fn from_name(name: &str) -> Option<GridCell> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_corner(self) -> bool {
        self.row() != 1 && self.col() != 1
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid cell containing the box center. Centers outside the room are clamped
/// onto the nearest border cell.
pub fn grid_cell_of(b: &OrientedBox, room: &RoomSpec) -> GridCell {
    let c = b.center();
    let index = |v: f64| (v.floor().max(0.0) as usize).min(2);
    let col = index(3.0 * c.x / room.length());
    let row = index(3.0 * (room.width() - c.y) / room.width());
    GridCell::from_row_col(row, col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    #[serde(rename = "oob")]
    OutOfBounds,
    #[serde(rename = "overlap")]
    Overlap,
}

/// A constraint violation. `boxes` holds one index for out-of-bounds and the
/// pair `(i, j)`, `i < j`, for overlaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub boxes: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::OutOfBounds => write!(f, "box {} extends beyond the floor plan", self.boxes[0]),
            ViolationKind::Overlap => write!(f, "boxes {} and {} overlap", self.boxes[0], self.boxes[1]),
        }
    }
}

/// All out-of-bounds boxes (in box order), then all overlapping pairs.
pub fn validate_layout(layout: &Layout, tol: f64) -> Vec<Violation> {
    let boxes = layout.boxes();
    let mut out: Vec<Violation> = boxes
        .iter()
        .enumerate()
        .filter(|(_, b)| out_of_bounds(b, layout.room(), tol))
        .map(|(i, _)| Violation { kind: ViolationKind::OutOfBounds, boxes: vec![i] })
        .collect();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if boxes_overlap(&boxes[i], &boxes[j], tol) {
                out.push(Violation { kind: ViolationKind::Overlap, boxes: vec![i, j] });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obox(center: [f64; 3], size: [f64; 3], yaw: f64) -> OrientedBox {
        OrientedBox::new("thing", center, size, yaw).unwrap()
    }

    fn same_corner_set(got: [Point2; 4], want: &[(f64, f64)]) {
        for &(x, y) in want {
            assert!(
                got.iter().any(|p| (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12),
                "corner ({x}, {y}) missing from {got:?}"
            );
        }
    }

    #[test]
    fn footprint_corners() {
        let square = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
        let b = obox([1.0, 1.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        same_corner_set(footprint_polygon(&b), &square);
        assert!(polygon_area(&footprint_polygon(&b)) > 0.0, "counter-clockwise");
        same_corner_set(footprint_polygon(&b.with_orientation(90.0).unwrap()), &square);

        let r2 = 2f64.sqrt();
        let b = obox([0.0, 0.0, 1.0], [2.0, 2.0, 2.0], 45.0);
        same_corner_set(footprint_polygon(&b), &[(0.0, -r2), (r2, 0.0), (0.0, r2), (-r2, 0.0)]);
    }

    #[test]
    fn iou_closed_form_cases() {
        let a = obox([0.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        let b = obox([1.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        assert_eq!(box_iou_3d(&a, &a), 1.0);
        assert!((box_iou_3d(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let far = obox([10.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        assert_eq!(box_iou_3d(&a, &far), 0.0);
        // stacked: shared footprint but disjoint vertical ranges
        let above = obox([0.0, 0.0, 3.5], [2.0, 2.0, 2.0], 0.0);
        assert_eq!(box_iou_3d(&a, &above), 0.0);
    }

    #[test]
    fn iou_is_bit_symmetric() {
        let a = obox([0.3, 0.1, 0.6], [1.2, 1.2, 0.7], 17.0);
        let b = obox([0.9, -0.2, 0.4], [0.8, 0.8, 1.5], 71.0);
        assert_eq!(box_iou_3d(&a, &b).to_bits(), box_iou_3d(&b, &a).to_bits());
    }

    #[test]
    fn bounds_checks() {
        let room = RoomSpec::new("bedroom", 6.0, 6.0).unwrap();
        assert!(!out_of_bounds(&obox([3.0, 3.0, 0.5], [1.0, 1.0, 1.0], 30.0), &room, 0.01));
        assert!(out_of_bounds(&obox([0.0, 0.0, 0.5], [0.1, 1.0, 0.1], 0.0), &room, 0.01));
        assert!(out_of_bounds(&obox([5.9, 3.0, 0.5], [0.4, 1.0, 0.4], 0.0), &room, 0.01));
        // flush against the wall is inside
        assert!(!out_of_bounds(&obox([5.8, 3.0, 0.5], [0.4, 1.0, 0.4], 0.0), &room, 0.01));
    }

    #[test]
    fn overlap_checks() {
        let a = obox([0.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        let b = obox([1.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        let touching = obox([2.0, 0.0, 1.0], [2.0, 2.0, 2.0], 0.0);
        assert!(boxes_overlap(&a, &a, 0.01));
        assert!(boxes_overlap(&a, &b, 0.01));
        assert!(!boxes_overlap(&a, &touching, 0.01));
        assert!(!boxes_overlap(&a, &touching, 0.0));
        // a rotated box whose AABB overlaps but footprint does not
        let diamond = obox([1.6, 1.6, 1.0], [1.0, 2.0, 1.0], 45.0);
        assert!(!boxes_overlap(&a, &diamond, 0.01));
        assert_eq!(box_iou_3d(&a, &diamond), 0.0);
    }

    #[test]
    fn grid_cells() {
        let room = RoomSpec::new("bedroom", 6.0, 6.0).unwrap();
        let at = |x, y| grid_cell_of(&obox([x, y, 0.5], [0.2, 1.0, 0.2], 0.0), &room);
        assert_eq!(at(1.0, 5.0), GridCell::TopLeft);
        assert_eq!(at(3.0, 3.0), GridCell::Center);
        assert_eq!(at(5.5, 0.5), GridCell::BottomRight);
        assert_eq!(at(-1.0, 7.0), GridCell::TopLeft);
        assert_eq!(at(6.0, 0.0), GridCell::BottomRight);
        for cell in GridCell::ALL {
            assert_eq!(GridCell::from_row_col(cell.row(), cell.col()), cell);
            assert_eq!(GridCell::from_name(cell.name()), Some(cell));
            let x = (cell.col() as f64 + 0.5) * 2.0;
            let y = 6.0 - (cell.row() as f64 + 0.5) * 2.0;
            assert_eq!(at(x, y), cell);
        }
        assert_eq!(serde_json::to_string(&GridCell::TopLeft).unwrap(), "\"top-left\"");
    }

    #[test]
    fn validator_lists_oob_then_overlaps() {
        let room = RoomSpec::new("bedroom", 4.0, 4.0).unwrap();
        let layout = Layout::new(
            room,
            vec![
                obox([3.9, 2.0, 0.5], [0.6, 1.0, 0.6], 0.0),
                obox([1.0, 1.0, 0.5], [1.0, 1.0, 1.0], 0.0),
                obox([1.3, 1.0, 0.5], [1.0, 1.0, 1.0], 0.0),
            ],
        )
        .unwrap();
        let v = validate_layout(&layout, DEFAULT_TOLERANCE);
        assert_eq!(
            v,
            vec![
                Violation { kind: ViolationKind::OutOfBounds, boxes: vec![0] },
                Violation { kind: ViolationKind::Overlap, boxes: vec![1, 2] },
            ]
        );
        assert_eq!(serde_json::to_value(&v[0]).unwrap()["kind"], "oob");
    }
}
