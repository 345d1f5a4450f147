use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chronos::eeg::{EventGraph, Provenance};
use chronos::harness::Report;
use chronos::llm::scripted::fixture_path;

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../chronos.toml")
}

fn chronos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronos"))
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .arg("--config")
        .arg(config())
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    fixture_path(name).to_str().unwrap().to_string()
}

#[test]
fn ingest_index_ask() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&chronos(dir.path(), &["ingest", "--input", &fixture("richest_store.jsonl"), "--store", "s.jsonl"]));
    assert!(out.contains("wrote 8 quadruples"));
    ok(&chronos(dir.path(), &["index", "--store", "s.jsonl", "--out", "i.json"]));
    let q = "Who was the world’s richest person on August 20, 2025?";
    let answer = ok(&chronos(dir.path(), &["ask", "--question", q, "--store", "s.jsonl", "--index", "i.json"]));
    assert_eq!(answer.trim(), "Elon Musk");
}

#[test]
fn ask_explain_and_dump_graph() {
    let dir = tempfile::tempdir().unwrap();
    let q = "Which company’s stock surge led to Elon Musk losing his position as the world’s richest person on September 10, 2025?";
    let out = ok(&chronos(
        dir.path(),
        &["ask", "--question", q, "--store", &fixture("richest_store.jsonl"), "--explain", "--dump-graph", "g.json"],
    ));
    for needle in ["entities:", "window: 2025-09-10", "retrieved:", "follow-up query: Oracle", "Temporal view", "Entity:"] {
        assert!(out.contains(needle), "missing {needle:?} in\n{out}");
    }
    assert_eq!(out.lines().last().unwrap(), "Oracle");
    let graph = EventGraph::parse(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert!(graph
        .nodes
        .iter()
        .any(|n| n.quad.subject == "Oracle stock price" && n.provenance == Provenance::Augmented));
}

#[test]
fn eval_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture("richest_store.jsonl");
    let data = fixture("richest_questions.jsonl");
    let full = ok(&chronos(
        dir.path(),
        &["--set", "harness.deterministic=true", "eval", "--method", "chronos", "--dataset", &data, "--store", &store, "--dump-graphs", "graphs"],
    ));
    assert!(full.contains("runs/chronos.json"), "{full}");
    let report = Report::load(dir.path().join("runs/chronos.json")).unwrap();
    assert_eq!(report.overall(), Some(100.0));
    assert!(report.records.iter().all(|r| r.latency_ms.is_none()));
    assert!(dir.path().join("runs/chronos.csv").exists());
    assert_eq!(std::fs::read_dir(dir.path().join("graphs")).unwrap().count(), 5);

    ok(&chronos(
        dir.path(),
        &["eval", "--method", "chronos", "--ablate", "event_augmentation", "--dataset", &data, "--store", &store],
    ));
    ok(&chronos(dir.path(), &["eval", "--method", "direct", "--dataset", &data, "--store", &store, "--out", "d.json"]));

    let table = ok(&chronos(
        dir.path(),
        &["report", "--compare", "runs/chronos.json", "runs/chronos-event_augmentation.json", "d.json", "--overall-both"],
    ));
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("Run") && lines[0].contains("Overall (items)"));
    assert!(lines[2].starts_with("chronos ") && lines[2].contains("100.00"));
    assert!(lines[3].starts_with("chronos-event_augmentation"));
    assert!(lines[4].starts_with("direct"));

    let json = ok(&chronos(dir.path(), &["report", "--compare", "d.json", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"][0]["run"], "direct");
}

#[test]
fn overrides_reach_the_run_config() {
    let dir = tempfile::tempdir().unwrap();
    let store = fixture("richest_store.jsonl");
    let data = fixture("richest_questions.jsonl");
    ok(&chronos(
        dir.path(),
        &["--set", "retrieval.top_n=2", "eval", "--method", "chronos", "--dataset", &data, "--store", &store, "--out", "r.json"],
    ));
    let r = Report::load(dir.path().join("r.json")).unwrap();
    assert_eq!(r.config["retrieval"]["top_n"], 2);

    let out = Command::new(env!("CARGO_BIN_EXE_chronos"))
        .current_dir(dir.path())
        .env("CHRONOS__RETRIEVAL__ALPHA", "0.5")
        .arg("--config")
        .arg(config())
        .args(["eval", "--method", "chronos", "--dataset", &data, "--store", &store, "--out", "e.json"])
        .output()
        .unwrap();
    ok(&out);
    let r = Report::load(dir.path().join("e.json")).unwrap();
    assert_eq!(r.config["retrieval"]["alpha"], 0.5);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "{\"subject\":\"a\",\"relation\":\"b\",\"object\":\"c\",\"timestamp\":\"2024-13-01\"}\n").unwrap();
    let out = chronos(dir.path(), &["ingest", "--input", "bad.jsonl", "--store", "s.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("line 1"), "{err}");

    let store = fixture("richest_store.jsonl");
    let data = fixture("richest_questions.jsonl");
    for args in [
        vec!["eval", "--method", "chronos", "--ablate", "nonsense", "--dataset", &data, "--store", &store],
        vec!["eval", "--method", "direct", "--ablate", "entity_view", "--dataset", &data, "--store", &store],
        vec!["eval", "--method", "oracle", "--dataset", &data, "--store", &store],
        vec!["--set", "retrieval.top_n=0", "ask", "--question", "q", "--store", &store],
        vec!["--set", "retrieval.bogus=1", "ask", "--question", "q", "--store", &store],
    ] {
        let out = chronos(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}
