//! Rule-based placement sentences for a layout file.
//!
//! ```text
//! cargo run --example describe -- [LAYOUT_JSON]
//! ```

use std::path::{Path, PathBuf};

use roomweaver::describer::describe;
use roomweaver::layout::LayoutDocument;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/layouts/five_boxes.json"));
    let doc: LayoutDocument = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let layout = doc.to_layout()?;
    let room = layout.room();
    println!("{} {:.2} x {:.2} m, {} objects", room.room_type(), room.length(), room.width(), layout.len());
    for sentence in describe(&layout).sentences {
        println!("  {sentence}");
    }
    Ok(())
}
