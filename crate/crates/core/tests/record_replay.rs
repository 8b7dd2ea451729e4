mod common;

use std::fs;

use common::fixtures;
use roomweaver::describer::{describe, paraphrase, DescriptionSource};
use roomweaver::gateway::stub::{nearest_exemplar_reply, StubReply, StubServer};
use roomweaver::gateway::{
    ChatExchange, ChatParams, Gateway, GatewayConfig, GatewayError, GatewayMode, HttpTransport, RetryPolicy, Role,
};
use roomweaver::ingest::{load_split, SplitName};
use roomweaver::layout::LayoutDocument;
use roomweaver::pipeline::{generate, GenerateRequest};
use roomweaver::prompt::{ExemplarStore, FormatOptions};

fn recorder(server: &StubServer, dir: &std::path::Path, key: &str) -> Gateway {
    let transport = HttpTransport::new(&server.base_url(), key, RetryPolicy::default());
    let mut gateway =
        Gateway::with_transport(GatewayMode::Record, Some(dir.to_path_buf()), Box::new(transport)).unwrap();
    gateway.add_secret(key);
    gateway
}

#[test]
fn rerecording_reproduces_checked_in_fixtures() {
    let fx = fixtures();
    let store = ExemplarStore::load(&fx.join("store")).unwrap();
    let test = load_split(&fx.join("dataset"), SplitName::Test, "bedroom").unwrap();
    let server = StubServer::spawn(|r| StubReply::Content(nearest_exemplar_reply(&r.messages))).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let gateway = recorder(&server, tmp.path(), "stub-key");
    let format = FormatOptions::default();
    for scene in &test.scenes {
        let room = scene.layout.room();
        let description = fs::read_to_string(fx.join("queries").join(format!("{}.txt", scene.id))).unwrap();
        assert_eq!(description.trim(), describe(&scene.layout).text());
        let request = GenerateRequest::new(room.room_type(), room.length(), room.width(), description.trim());
        let live = generate(&store, &request, &format, &gateway).unwrap();
        let replayed = generate(&store, &request, &format, &Gateway::replay(fx.join("llm"))).unwrap();
        assert_eq!(live.document().to_json(), replayed.document().to_json(), "{}", scene.id);
    }
    assert_eq!(server.hits(), test.scenes.len());
    for entry in fs::read_dir(tmp.path()).unwrap() {
        let entry = entry.unwrap();
        let checked_in = fs::read(fx.join("llm").join(entry.file_name())).unwrap();
        assert_eq!(fs::read(entry.path()).unwrap(), checked_in);
    }
}

#[test]
fn replay_serves_recorded_text_without_network() {
    let tmp = tempfile::tempdir().unwrap();
    let server = StubServer::spawn(|r| StubReply::Content(format!("reply to {}", r.messages.len()))).unwrap();
    let gateway = recorder(&server, tmp.path(), "k");
    let exchange = ChatExchange::new(ChatParams::layout()).with(Role::System, "s").with(Role::User, "u");
    let recorded = gateway.complete(&exchange).unwrap();
    drop(server);

    let replay = Gateway::replay(tmp.path());
    assert_eq!(replay.complete(&exchange).unwrap(), recorded);
    assert_eq!(replay.complete(&exchange).unwrap(), recorded);
    let other = exchange.clone().with(Role::User, "again");
    assert!(matches!(replay.complete(&other), Err(GatewayError::FixtureMiss(h)) if h == other.request_hash()));
}

#[test]
fn secrets_never_reach_fixture_files() {
    let tmp = tempfile::tempdir().unwrap();
    let key = "sk-test-4f1c9a";
    // a misbehaving upstream that echoes the credential back
    let server =
        StubServer::spawn(|r| StubReply::Content(format!("auth was {}", r.authorization.clone().unwrap_or_default())))
            .unwrap();
    let gateway = recorder(&server, tmp.path(), key);
    let exchange = ChatExchange::new(ChatParams::layout()).with(Role::User, format!("please ignore {key}"));
    assert!(gateway.complete(&exchange).unwrap().contains(key));
    let files: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    assert!(!text.contains(key));
    assert!(text.contains("[REDACTED]"));
}

#[test]
fn live_mode_requires_a_key() {
    let mut config = GatewayConfig::new(GatewayMode::Live);
    config.api_key = None;
    assert!(matches!(Gateway::new(config), Err(GatewayError::Auth(_))));
    assert!(Gateway::new(GatewayConfig::new(GatewayMode::Record)).is_err());
}

#[test]
fn paraphrase_over_http_is_verified() {
    let fx = fixtures();
    let doc = serde_json::from_str::<LayoutDocument>(&fs::read_to_string(fx.join("layouts/five_boxes.json")).unwrap())
        .unwrap();
    let original = describe(&doc.to_layout().unwrap());
    let tmp = tempfile::tempdir().unwrap();

    let reworded = StubServer::spawn(|r| {
        let user = &r.messages.last().unwrap().content;
        let lines: Vec<String> = user
            .lines()
            .filter(|l| l.starts_with("A ") || l.starts_with("An "))
            .map(|l| format!("In this room, {}", l.to_lowercase()))
            .collect();
        StubReply::Content(lines.join("\n"))
    })
    .unwrap();
    let out = paraphrase(&original, Some(&recorder(&reworded, &tmp.path().join("a"), "k"))).unwrap();
    assert_eq!(out.source, DescriptionSource::Paraphrased);
    assert_eq!(out.sentences.len(), original.sentences.len());
    assert!(out.sentences[0].starts_with("In this room, a double bed"));

    let garbage = StubServer::spawn(|_| StubReply::Content("Sure! Here you go.".into())).unwrap();
    let out = paraphrase(&original, Some(&recorder(&garbage, &tmp.path().join("b"), "k"))).unwrap();
    assert_eq!(out, original);

    let down = StubServer::spawn(|_| StubReply::Status(401)).unwrap();
    assert!(matches!(
        paraphrase(&original, Some(&recorder(&down, &tmp.path().join("c"), "k"))),
        Err(GatewayError::Auth(_))
    ));
}
