//! Record model responses through a local stub, then replay them offline.
//!
//! ```text
//! cargo run --example record_replay -- [OUT_DIR]
//! ```
//!
//! Queries are the rule-based descriptions of the fixture test rooms. OUT_DIR
//! receives `llm/` (recorded exchanges) and `queries/` (one description per
//! room); a temporary directory is used when it is omitted.

use std::fs;
use std::path::{Path, PathBuf};

use roomweaver::describer::describe;
use roomweaver::gateway::stub::{nearest_exemplar_reply, StubReply, StubServer};
use roomweaver::gateway::{Gateway, GatewayMode, HttpTransport, RetryPolicy};
use roomweaver::ingest::{load_split, SplitName};
use roomweaver::pipeline::{generate, GenerateRequest};
use roomweaver::prompt::{ExemplarStore, FormatOptions, Strategy};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| tmp.path().to_path_buf());
    let store = ExemplarStore::load(&fixtures().join("store"))?;
    let test = load_split(&fixtures().join("dataset"), SplitName::Test, "bedroom")?;

    let server = StubServer::spawn(|req| StubReply::Content(nearest_exemplar_reply(&req.messages)))?;
    let transport = HttpTransport::new(&server.base_url(), "stub-key", RetryPolicy::default());
    let mut recorder = Gateway::with_transport(GatewayMode::Record, Some(out.join("llm")), Box::new(transport))?;
    recorder.add_secret("stub-key");

    fs::create_dir_all(out.join("queries"))?;
    let mut requests = Vec::new();
    for scene in &test.scenes {
        let description = describe(&scene.layout).text();
        fs::write(out.join("queries").join(format!("{}.txt", scene.id)), format!("{description}\n"))?;
        let room = scene.layout.room();
        let request = GenerateRequest::new(room.room_type(), room.length(), room.width(), &description);
        let mut contrast = request.clone();
        contrast.strategy = Strategy::PosNeg;
        requests.push((scene.id.clone(), request));
        if requests.len() == 1 {
            requests.push((format!("{}+pos_neg", scene.id), contrast));
        }
    }

    let format = FormatOptions::default();
    let mut recorded = Vec::new();
    for (id, request) in &requests {
        let g = generate(&store, request, &format, &recorder)?;
        println!("recorded {id}: {} boxes, {} violation(s)", g.layout.len(), g.report.diagnostics.violations.len());
        recorded.push(g.document().to_json());
    }
    println!("stub served {} request(s)", server.hits());

    let replay = Gateway::replay(out.join("llm"));
    for ((id, request), expected) in requests.iter().zip(&recorded) {
        let again = generate(&store, request, &format, &replay)?.document().to_json();
        assert_eq!(&again, expected, "replay differs for {id}");
    }
    println!("replayed {} generation(s) offline into {}", requests.len(), out.display());
    Ok(())
}
