//! Run the HTTP service in replay mode and call it once.
//!
//! ```text
//! cargo run --example serve -- [--forever]
//! ```
//!
//! Without `--forever` the example binds an ephemeral port, sends a health
//! check and a validate request, and exits.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use roomweaver::assembler::Catalog;
use roomweaver::gateway::Gateway;
use roomweaver::prompt::ExemplarStore;
use roomweaver::service::{router, serve, AppState};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = ExemplarStore::load(&fixtures.join("store"))?;
    let state = Arc::new(
        AppState::new(store, Gateway::replay(fixtures.join("llm")))
            .with_catalog(Catalog::load(&fixtures.join("catalog.json"))?),
    );

    if std::env::args().any(|a| a == "--forever") {
        let addr: SocketAddr = "127.0.0.1:8080".parse()?;
        println!("listening on http://{addr}/v1");
        serve(addr, state).await?;
        return Ok(());
    }

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let layout = std::fs::read_to_string(fixtures.join("layouts/five_boxes.json"))?;
    let body = format!("{{\"layout\": {layout}}}");
    let (health, validate) = tokio::task::spawn_blocking(move || {
        let health = ureq::get(&format!("{base}/v1/health")).call()?.body_mut().read_to_string()?;
        let validate = ureq::post(&format!("{base}/v1/validate"))
            .header("content-type", "application/json")
            .send(&body)?
            .body_mut()
            .read_to_string()?;
        Ok::<_, ureq::Error>((health, validate))
    })
    .await??;
    println!("GET  /v1/health   {health}");
    println!("POST /v1/validate {validate}");
    Ok(())
}
