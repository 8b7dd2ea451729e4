//! Turn a layout into placed catalog models plus a camera ring.
//!
//! ```text
//! cargo run --example assemble -- [OUT_DIR]
//! ```

use std::path::{Path, PathBuf};

use roomweaver::assembler::{assemble, retrieve_model, AssembleOptions, CameraRing, Catalog};
use roomweaver::layout::LayoutDocument;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let catalog = Catalog::load(&fixtures.join("catalog.json"))?;
    let doc: LayoutDocument =
        serde_json::from_str(&std::fs::read_to_string(fixtures.join("layouts/five_boxes.json"))?)?;
    let layout = doc.to_layout()?;

    for b in layout.boxes() {
        let model = retrieve_model(b, &catalog).expect("fixture catalog covers the layout");
        let (s, m) = (b.size(), model.dims);
        println!(
            "{:<11} box {:.2}x{:.2}x{:.2} -> {:<18} {:.2}x{:.2}x{:.2}",
            b.category(),
            s.w,
            s.h,
            s.d,
            model.model_id,
            m.w,
            m.h,
            m.d
        );
    }

    let opts = AssembleOptions { fit_to_box: true, cameras: Some(CameraRing { count: 12, ..CameraRing::default() }) };
    let scene = assemble(&layout, &catalog, &opts)?;
    let first = &scene.cameras[0];
    println!(
        "{} cameras, first at ({:.3}, {:.3}, {:.3})",
        scene.cameras.len(),
        first.position.x,
        first.position.y,
        first.position.z
    );

    if let Some(out) = std::env::args().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("scene.json"), scene.to_json())?;
        std::fs::write(out.join("trajectory.txt"), scene.to_trajectory())?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
