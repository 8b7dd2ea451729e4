//! Oriented-box intersection and the layout validators.
//!
//! ```text
//! cargo run --example geometry
//! ```

use roomweaver::geometry::{box_iou_3d, boxes_overlap, grid_cell_of, out_of_bounds, validate_layout};
use roomweaver::layout::{Layout, OrientedBox, RoomSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let room = RoomSpec::new("bedroom", 4.0, 3.5)?;
    let bed = OrientedBox::new("double bed", [2.0, 2.4, 0.45], [1.6, 0.9, 2.0], 180.0)?;
    let chair = OrientedBox::new("armchair", [2.6, 1.2, 0.4], [0.8, 0.8, 0.8], 45.0)?;
    let wardrobe = OrientedBox::new("wardrobe", [0.2, 1.0, 1.1], [1.5, 2.2, 0.6], 90.0)?;

    for (name, a, b) in [("bed/chair", &bed, &chair), ("bed/bed", &bed, &bed)] {
        println!("{name:<10} iou {:.4}  overlap {}", box_iou_3d(a, b), boxes_overlap(a, b, 0.01));
    }
    for b in [&bed, &chair, &wardrobe] {
        println!(
            "{:<10} cell {:<14} out of bounds {}",
            b.category(),
            grid_cell_of(b, &room).name(),
            out_of_bounds(b, &room, 0.01)
        );
    }

    let layout = Layout::new(room, vec![bed, chair, wardrobe])?;
    for v in validate_layout(&layout, 0.01) {
        println!("violation: {v}");
    }
    Ok(())
}
