#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use roomweaver::layout::{Layout, OrientedBox, RoomSpec};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub const CATEGORIES: [&str; 8] =
    ["double bed", "nightstand", "wardrobe", "desk", "chair", "tv stand", "armchair", "pendant lamp"];

fn cents(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = ((lo * 100.0).ceil() as i64, (hi * 100.0).floor() as i64);
    rng.random_range(lo..=hi) as f64 / 100.0
}

/// Room with dimensions exact at two decimals.
pub fn random_room(rng: &mut ChaCha8Rng) -> RoomSpec {
    RoomSpec::new("bedroom", cents(rng, 2.0, 8.0), cents(rng, 2.0, 8.0)).unwrap()
}

/// Box with every value exact at two decimals (orientation at a quarter
/// degree), center inside the room, resting on or above the floor.
pub fn random_box(rng: &mut ChaCha8Rng, room: &RoomSpec) -> OrientedBox {
    let category = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
    let (w, h, d) = (cents(rng, 0.1, 2.5), cents(rng, 0.1, 2.5), cents(rng, 0.1, 2.5));
    let x = cents(rng, 0.0, room.length());
    let y = cents(rng, 0.0, room.width());
    let z = cents(rng, (h / 2.0 * 100.0).ceil() / 100.0, h / 2.0 + 1.0);
    let yaw = rng.random_range(0..1440) as f64 / 4.0;
    OrientedBox::new(category, [x, y, z], [w, h, d], yaw).unwrap()
}

pub fn random_layout(rng: &mut ChaCha8Rng, max_boxes: usize) -> Layout {
    random_layout_sized(rng, 0, max_boxes)
}

pub fn random_layout_sized(rng: &mut ChaCha8Rng, min_boxes: usize, max_boxes: usize) -> Layout {
    let room = random_room(rng);
    let n = rng.random_range(min_boxes..=max_boxes);
    let mut boxes: Vec<OrientedBox> = Vec::with_capacity(n);
    while boxes.len() < n {
        let b = random_box(rng, &room);
        if !boxes.contains(&b) {
            boxes.push(b);
        }
    }
    Layout::new(room, boxes).unwrap()
}

/// Pair of boxes whose centers are close enough to overlap often.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (OrientedBox, OrientedBox) {
    fn make(rng: &mut ChaCha8Rng, cx: f64, cy: f64) -> OrientedBox {
        let (w, h, d) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let z = h / 2.0 + rng.random_range(0.0..0.8);
        let yaw = rng.random_range(0.0..360.0);
        OrientedBox::new("thing", [cx, cy, z], [w, h, d], yaw).unwrap()
    }
    let (ax, ay) = (rng.random_range(2.0..4.0), rng.random_range(2.0..4.0));
    let a = make(rng, ax, ay);
    let (bx, by) = (ax + rng.random_range(-1.5..1.5), ay + rng.random_range(-1.5..1.5));
    (a, make(rng, bx, by))
}

/// Membership test in the box's local frame, with every half extent grown by
/// `margin` (negative shrinks).
pub fn contains(b: &OrientedBox, p: [f64; 3], margin: f64) -> bool {
    let (c, s) = (b.center(), b.size());
    let (sin, cos) = b.orientation_deg().to_radians().sin_cos();
    let (dx, dy) = (p[0] - c.x, p[1] - c.y);
    let u = dx * cos + dy * sin;
    let v = -dx * sin + dy * cos;
    u.abs() <= s.w / 2.0 + margin && v.abs() <= s.d / 2.0 + margin && (p[2] - c.z).abs() <= s.h / 2.0 + margin
}

/// World-space AABB of a box: ([xmin, ymin, zmin], [xmax, ymax, zmax]).
pub fn aabb(b: &OrientedBox) -> ([f64; 3], [f64; 3]) {
    let (c, s) = (b.center(), b.size());
    let (sin, cos) = b.orientation_deg().to_radians().sin_cos();
    let ex = (s.w * cos).abs() / 2.0 + (s.d * sin).abs() / 2.0;
    let ey = (s.w * sin).abs() / 2.0 + (s.d * cos).abs() / 2.0;
    ([c.x - ex, c.y - ey, c.z - s.h / 2.0], [c.x + ex, c.y + ey, c.z + s.h / 2.0])
}

/// x-interval of the box footprint on the horizontal line at `y`.
fn row_interval(b: &OrientedBox, y: f64) -> Option<(f64, f64)> {
    let (c, s) = (b.center(), b.size());
    let (sin, cos) = b.orientation_deg().to_radians().sin_cos();
    let dy = y - c.y;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    // |dx*cos + dy*sin| <= w/2 and |-dx*sin + dy*cos| <= d/2, solved for dx
    for (k, offset, half) in [(cos, dy * sin, s.w / 2.0), (-sin, dy * cos, s.d / 2.0)] {
        if k.abs() < 1e-15 {
            if offset.abs() > half {
                return None;
            }
            continue;
        }
        let (a, b) = ((-half - offset) / k, (half - offset) / k);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    (lo <= hi).then_some((c.x + lo, c.x + hi))
}

/// Number of grid cells `origin + (k + 0.5) * step`, k in 0..n, inside [lo, hi].
fn cells_in(lo: f64, hi: f64, origin: f64, step: f64, n: usize) -> usize {
    let first = ((lo - origin) / step - 0.5).ceil().max(0.0);
    let last = ((hi - origin) / step - 0.5).floor().min(n as f64 - 1.0);
    if last < first {
        0
    } else {
        (last - first) as usize + 1
    }
}

/// IoU by counting voxel centers on an `n`^3 grid over the union's bounding
/// box. Rows are counted in closed form, which keeps fine grids cheap.
pub fn voxel_iou(a: &OrientedBox, b: &OrientedBox, n: usize) -> f64 {
    let (amin, amax) = aabb(a);
    let (bmin, bmax) = aabb(b);
    let lo: Vec<f64> = (0..3).map(|i| amin[i].min(bmin[i])).collect();
    let hi: Vec<f64> = (0..3).map(|i| amax[i].max(bmax[i])).collect();
    let step: Vec<f64> = (0..3).map(|i| (hi[i] - lo[i]) / n as f64).collect();
    let z_cells = |bx: &OrientedBox| {
        let (z0, z1) = bx.z_range();
        cells_in(z0, z1, lo[2], step[2], n)
    };
    let ((a0, a1), (b0, b1)) = (a.z_range(), b.z_range());
    let z_both = cells_in(a0.max(b0), a1.min(b1), lo[2], step[2], n);
    let (za, zb) = (z_cells(a), z_cells(b));
    let (mut count_a, mut count_b, mut count_both) = (0u64, 0u64, 0u64);
    for row in 0..n {
        let y = lo[1] + (row as f64 + 0.5) * step[1];
        let ia = row_interval(a, y);
        let ib = row_interval(b, y);
        let cells = |iv: Option<(f64, f64)>| iv.map_or(0, |(l, h)| cells_in(l, h, lo[0], step[0], n)) as u64;
        count_a += cells(ia) * za as u64;
        count_b += cells(ib) * zb as u64;
        if let (Some((l1, h1)), Some((l2, h2))) = (ia, ib) {
            count_both += cells(Some((l1.max(l2), h1.min(h2))).filter(|(l, h)| l <= h)) * z_both as u64;
        }
    }
    let union = count_a + count_b - count_both;
    if union == 0 {
        0.0
    } else {
        count_both as f64 / union as f64
    }
}

/// Whether uniform samples over the AABB intersection hit both boxes, each
/// grown by `margin`.
pub fn sampled_overlap(a: &OrientedBox, b: &OrientedBox, margin: f64, samples: usize, rng: &mut ChaCha8Rng) -> bool {
    let (amin, amax) = aabb(a);
    let (bmin, bmax) = aabb(b);
    let lo: Vec<f64> = (0..3).map(|i| amin[i].max(bmin[i]) - margin).collect();
    let hi: Vec<f64> = (0..3).map(|i| amax[i].min(bmax[i]) + margin).collect();
    if (0..3).any(|i| lo[i] >= hi[i]) {
        return false;
    }
    (0..samples).any(|_| {
        let p = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1]), rng.random_range(lo[2]..hi[2])];
        contains(a, p, margin) && contains(b, p, margin)
    })
}
