mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;
use serde_json::Value;

fn roomweaver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomweaver"))
        .args(args)
        .env_remove("ROOMWEAVER_API_KEY")
        .env_remove("ROOMWEAVER_FIXTURE_DIR")
        .output()
        .unwrap()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn error_code(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {line}"));
    v["error"]["code"].as_str().unwrap().to_string()
}

fn generate_args(out: &Path, description: &str, extra: &[&str]) -> Vec<String> {
    let fx = fixtures();
    let mut args: Vec<String> = [
        "generate",
        "--room-type",
        "bedroom",
        "--length",
        "3.53",
        "--width",
        "4.07",
        "--store",
        &s(&fx.join("store")),
        "--fixture-dir",
        &s(&fx.join("llm")),
        "--description-file",
        description,
        "--out",
        &s(out),
    ]
    .iter()
    .map(|a| a.to_string())
    .collect();
    args.extend(extra.iter().map(|a| a.to_string()));
    args
}

fn run(args: &[String]) -> Output {
    roomweaver(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn replay_generate_matches_golden_prompt() {
    let fx = fixtures();
    let tmp = tempfile::tempdir().unwrap();
    let query = s(&fx.join("queries/bedroom-test-000.txt"));
    let mut layouts = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("g{i}.json"));
        let prompt = tmp.path().join(format!("p{i}.txt"));
        let o = run(&generate_args(&out, &query, &["--scene-id", "bedroom-test-000", "--prompt-out", &s(&prompt)]));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("8 boxes"));
        assert_eq!(
            fs::read_to_string(&prompt).unwrap(),
            fs::read_to_string(fx.join("golden/bedroom-test-000.k8.prompt.txt")).unwrap()
        );
        layouts.push(fs::read(&out).unwrap());
        let diagnostics: Value =
            serde_json::from_slice(&fs::read(tmp.path().join(format!("g{i}.diagnostics.json"))).unwrap()).unwrap();
        assert_eq!(diagnostics["attempts"], 1);
        assert_eq!(diagnostics["exemplars"].as_array().unwrap().len(), 8);
    }
    assert_eq!(layouts[0], layouts[1]);
    let doc: Value = serde_json::from_slice(&layouts[0]).unwrap();
    assert_eq!(doc["scene_id"], "bedroom-test-000");
    assert_eq!(doc["room"]["length"], 3.53);
}

#[test]
fn unrecorded_request_is_a_fixture_miss() {
    let tmp = tempfile::tempdir().unwrap();
    let query = tmp.path().join("q.txt");
    fs::write(&query, "A piano is placed at the center of the room.\n").unwrap();
    let o = run(&generate_args(&tmp.path().join("g.json"), &s(&query), &[]));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "fixture_miss");
    assert!(!tmp.path().join("g.json").exists());
}

#[test]
fn configuration_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let query = s(&fixtures().join("queries/bedroom-test-000.txt"));
    let out = tmp.path().join("g.json");
    let o = run(&generate_args(&out, &query, &["--strategy", "best"]));
    assert_eq!(o.status.code(), Some(3));
    let o = run(&generate_args(&out, &query, &["--mode", "live"]));
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_code(&o), "gateway_config");
    let o = roomweaver(&["generate", "--room-type", "bedroom"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(roomweaver(&["--help"]).status.code(), Some(0));
}

#[test]
fn evaluate_ground_truth_against_itself() {
    let gt = s(&fixtures().join("dataset/test"));
    let o = roomweaver(&["evaluate", "--pred", &gt, "--gt", &gt, "--label", "GT"]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(row[0], "GT");
    assert_eq!(&row[2..], ["100.00", "100.00", "100.00", "100.00"]);

    let tmp = tempfile::tempdir().unwrap();
    let json = tmp.path().join("report.json");
    let o = roomweaver(&["evaluate", "--pred", &gt, "--gt", &gt, "--json", &s(&json)]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&fs::read(json).unwrap()).unwrap();
    assert_eq!(report["miou"], 100.0);
    assert_eq!(report["scenes"].as_array().unwrap().len(), 4);
}

#[test]
fn evaluate_rejects_mismatched_sets() {
    let fx = fixtures();
    let o = roomweaver(&["evaluate", "--pred", &s(&fx.join("dataset/val")), "--gt", &s(&fx.join("dataset/test"))]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_code(&o), "scene_id_mismatch");
}

#[test]
fn assemble_matches_golden_scene() {
    let fx = fixtures();
    let tmp = tempfile::tempdir().unwrap();
    let (scene, trajectory) = (tmp.path().join("scene.json"), tmp.path().join("traj.txt"));
    let o = roomweaver(&[
        "assemble",
        "--layout",
        &s(&fx.join("layouts/five_boxes.json")),
        "--catalog",
        &s(&fx.join("catalog.json")),
        "--cameras",
        "8",
        "--out",
        &s(&scene),
        "--trajectory",
        &s(&trajectory),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(scene).unwrap(),
        fs::read_to_string(fx.join("golden/five_boxes.scene.json")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(trajectory).unwrap(),
        fs::read_to_string(fx.join("golden/five_boxes.trajectory.txt")).unwrap()
    );
}

#[test]
fn assemble_unknown_category_fails() {
    let fx = fixtures();
    let tmp = tempfile::tempdir().unwrap();
    let layout = tmp.path().join("piano.json");
    let text = fs::read_to_string(fx.join("layouts/five_boxes.json")).unwrap().replace("\"nightstand\"", "\"piano\"");
    fs::write(&layout, text).unwrap();
    let o = roomweaver(&[
        "assemble",
        "--layout",
        &s(&layout),
        "--catalog",
        &s(&fx.join("catalog.json")),
        "--out",
        &s(&tmp.path().join("s.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "category_not_in_catalog");
}

#[test]
fn describe_matches_golden_sentences() {
    let fx = fixtures();
    let o = roomweaver(&["describe", "--layout", &s(&fx.join("layouts/five_boxes.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        fs::read_to_string(fx.join("golden/five_boxes.sentences.txt")).unwrap()
    );
}

#[test]
fn ingest_rebuilds_checked_in_store() {
    let fx = fixtures();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("store");
    let report = tmp.path().join("rejected.json");
    let o = roomweaver(&[
        "ingest",
        "--dataset",
        &s(&fx.join("dataset")),
        "--room-type",
        "bedroom",
        "--out",
        &s(&out),
        "--report",
        &s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("kept 12, rejected 8 (6 negative exemplars)"));
    assert_eq!(fs::read(out.join("manifest.json")).unwrap(), fs::read(fx.join("store/manifest.json")).unwrap());
    for entry in fs::read_dir(fx.join("store/exemplars")).unwrap() {
        let entry = entry.unwrap();
        assert_eq!(fs::read(out.join("exemplars").join(entry.file_name())).unwrap(), fs::read(entry.path()).unwrap());
    }
    let rejected: Value = serde_json::from_slice(&fs::read(report).unwrap()).unwrap();
    assert_eq!(rejected.as_array().unwrap().len(), 8);
}
