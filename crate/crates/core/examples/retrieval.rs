//! Pick exemplars for a query room and render the prompt.
//!
//! ```text
//! cargo run --example retrieval -- [LENGTH WIDTH]
//! ```

use std::path::Path;

use roomweaver::layout::RoomSpec;
use roomweaver::prompt::{
    build_prompt, condition_distance, select_exemplars, Condition, ExemplarStore, FormatOptions, Strategy,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (length, width) = match args[..] {
        [l, w] => (l, w),
        _ => (3.53, 4.07),
    };
    let store = ExemplarStore::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/store"))?;
    let query =
        Condition::new("A double bed is placed at the center of the room.", RoomSpec::new("bedroom", length, width)?);

    for strategy in [Strategy::Retrieval, Strategy::PosNeg, Strategy::Random] {
        let chosen = select_exemplars(&store, &query, 4, strategy, 7)?;
        println!("{strategy:?}:");
        for e in &chosen {
            println!("  {:<18} {:?}  f = {:.4}", e.id, e.polarity, condition_distance(&e.condition, &query));
        }
    }

    let chosen = select_exemplars(&store, &query, 2, Strategy::Retrieval, 0)?;
    let bundle = build_prompt(&query, &chosen, &FormatOptions::default());
    println!("\n--- prompt ---\n{}", bundle.to_text());
    Ok(())
}
