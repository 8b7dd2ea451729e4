//! Score predictions against ground truth and print the summary table.
//!
//! ```text
//! cargo run --example evaluate
//! ```
//!
//! Predictions are replayed from the recorded fixtures for the test split.

use std::path::Path;

use roomweaver::describer::describe;
use roomweaver::gateway::Gateway;
use roomweaver::ingest::{load_split, SplitName};
use roomweaver::metrics::evaluate_set;
use roomweaver::pipeline::{generate, GenerateRequest};
use roomweaver::prompt::{ExemplarStore, FormatOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = ExemplarStore::load(&fixtures.join("store"))?;
    let gateway = Gateway::replay(fixtures.join("llm"));
    let test = load_split(&fixtures.join("dataset"), SplitName::Test, "bedroom")?;

    let gts: Vec<_> = test.scenes.iter().map(|s| (s.id.clone(), s.layout.clone())).collect();
    let mut preds = Vec::new();
    for scene in &test.scenes {
        let room = scene.layout.room();
        let request =
            GenerateRequest::new(room.room_type(), room.length(), room.width(), &describe(&scene.layout).text());
        preds.push((scene.id.clone(), generate(&store, &request, &FormatOptions::default(), &gateway)?.layout));
    }

    print!("{}", evaluate_set(&gts, &gts, 0.01)?.to_table("GT"));
    println!();
    print!("{}", evaluate_set(&preds, &gts, 0.01)?.to_table("replay"));
    Ok(())
}
