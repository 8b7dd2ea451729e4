//! Filter a dataset split and build an exemplar store from it.
//!
//! ```text
//! cargo run --example ingest -- [DATASET_ROOT]
//! ```

use std::path::{Path, PathBuf};

use roomweaver::ingest::{build_store, load_split, preprocess, Filters, SplitName, StoreOptions};
use roomweaver::prompt::Polarity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/dataset"));
    let train = load_split(&root, SplitName::Train, "bedroom")?;
    println!("{} bedroom scenes in {}", train.scenes.len(), root.display());

    let (kept, rejected) = preprocess(train.scenes, &Filters::default());
    for r in &rejected {
        let reasons: Vec<String> = r.reasons.iter().map(|x| serde_json::to_string(x).unwrap()).collect();
        println!("  reject {:<20} negative={:<5} {}", r.scene.id, r.is_negative_candidate(), reasons.join(" "));
    }

    let store = build_store(&kept, &rejected, &StoreOptions::new(0.01))?;
    println!("store: {} positives, {} negatives", store.count(Polarity::Positive), store.count(Polarity::Negative));
    if let Some(first) = store.exemplars().first() {
        println!("{}: {}", first.id, first.condition.description);
    }
    Ok(())
}
