use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tracelink::ingest::IngestConfig;
use tracelink::pipeline::ingest_to_snapshot;
use tracelink::synth::{SynthRepo, SynthSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tracelink"));
    c.env_remove("GITHUB_TOKEN").env_remove("LLM_API_KEY");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn snapshot(dir: &Path, repo: &SynthRepo) {
    let cfg = IngestConfig {
        snapshot_dir: dir.join("snaps"),
        ..IngestConfig::default()
    };
    ingest_to_snapshot(&repo.transport(cfg.page_size), None, &repo.spec.repo, &cfg, repo.now, true).unwrap();
}

/// Temp dir holding a snapshot and a built dataset at `ds/`.
fn workspace() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    snapshot(tmp.path(), &SynthRepo::generate(SynthSpec::default()));
    let o = run(tmp.path(), &["--snapshot", "snaps", "--out", "ds", "dataset"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let root = tmp.path().to_path_buf();
    (tmp, root)
}

#[test]
fn help_exits_zero_everywhere() {
    for sub in [&[][..], &["ingest"], &["dataset"], &["recover"], &["evaluate"], &["cards"], &["report"]] {
        let mut args: Vec<&str> = sub.to_vec();
        args.push("--help");
        let o = bin().args(&args).output().unwrap();
        assert_eq!(code(&o), 0, "{args:?}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn unknown_flag_exits_64() {
    let o = bin().args(["recover", "ds", "--bogus"]).output().unwrap();
    assert_eq!(code(&o), 64);
    let o = bin().args(["--nope", "report", "x"]).output().unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn offline_ingest_prints_eligibility_and_snapshot_id() {
    let tmp = tempfile::tempdir().unwrap();
    snapshot(tmp.path(), &SynthRepo::generate(SynthSpec::default()));
    let o = run(tmp.path(), &["ingest", "acme/widget", "--offline", "--snapshot", "snaps"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("eligible"));
    assert!(out.contains("snapshot: acme__widget@"));
}

#[test]
fn ineligible_snapshot_exits_2_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let mut repo = SynthRepo::generate(SynthSpec::default());
    repo.stats.stars = 10;
    snapshot(tmp.path(), &repo);
    let o = run(tmp.path(), &["--offline", "--snapshot", "snaps", "ingest", "acme/widget"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("not eligible"));
    let o = run(tmp.path(), &["--offline", "--snapshot", "snaps", "ingest", "acme/widget", "--force"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn live_ingest_without_token_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["ingest", "acme/widget", "--token-env", "TRACELINK_TEST_NO_SUCH_VAR"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn missing_snapshots_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("snaps")).unwrap();
    let o = run(tmp.path(), &["--snapshot", "snaps", "dataset"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn text_only_recovery_and_two_row_comparison() {
    let (_tmp, root) = workspace();
    let o = run(&root, &["recover", "ds", "--scorer", "tfidf", "--alpha", "1.0", "--kinds", "pull_request", "--out", "a"]);
    assert_eq!(code(&o), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("a/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["method"]["label"], "tfidf");
    assert_eq!(m["scoring"]["alpha"], 1.0);
    let line = fs::read_to_string(root.join("a/predictions.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    for c in first["ranked"].as_array().unwrap() {
        assert_eq!(c["final_score"], c["text_score"]);
    }

    let o = run(&root, &["recover", "ds", "--kinds", "pull_request", "--out", "b"]);
    assert_eq!(code(&o), 0);
    let o = run(&root, &["evaluate", "ds", "b", "a", "--out", "rep"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert_eq!(report["deltas"].as_array().unwrap().len(), 1);
    assert!(root.join("rep/report.txt").exists());

    let o = run(&root, &["report", "rep"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), fs::read_to_string(root.join("rep/report.txt")).unwrap());
}

#[test]
fn mismatched_query_sets_exit_6() {
    let (_tmp, root) = workspace();
    assert_eq!(code(&run(&root, &["recover", "ds", "--kinds", "commit", "--out", "a"])), 0);
    assert_eq!(code(&run(&root, &["recover", "ds", "--kinds", "issue", "--out", "b"])), 0);
    assert_eq!(code(&run(&root, &["evaluate", "ds", "a", "b"])), 6);
}

#[test]
fn offline_llm_with_empty_cassette_exits_5() {
    let (_tmp, root) = workspace();
    fs::create_dir(root.join("cass")).unwrap();
    let o = run(&root, &["--offline", "--cassette", "cass", "recover", "ds", "--scorer", "llm"]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_are_byte_identical() {
    let (_tmp, root) = workspace();
    assert_eq!(code(&run(&root, &["--snapshot", "snaps", "--out", "ds2", "dataset"])), 0);
    for f in ["notes.jsonl", "artifacts.jsonl", "links.jsonl", "manifest.json"] {
        assert_eq!(fs::read(root.join("ds").join(f)).unwrap(), fs::read(root.join("ds2").join(f)).unwrap(), "{f}");
    }
    assert_eq!(code(&run(&root, &["recover", "ds", "--out", "r1"])), 0);
    assert_eq!(code(&run(&root, &["recover", "ds2", "--out", "r2"])), 0);
    for f in ["predictions.jsonl", "run_manifest.json"] {
        assert_eq!(fs::read(root.join("r1").join(f)).unwrap(), fs::read(root.join("r2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_applies_and_flags_win() {
    let (_tmp, root) = workspace();
    fs::write(root.join("run.toml"), "[recover]\nalpha = 1.0\nkinds = [\"issue\"]\n").unwrap();
    assert_eq!(code(&run(&root, &["--config", "run.toml", "recover", "ds", "--out", "c1"])), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("c1/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["method"]["label"], "tfidf");
    assert_eq!(m["query_count"], 50);

    assert_eq!(code(&run(&root, &["--config", "run.toml", "recover", "ds", "--alpha", "0.5", "--out", "c2"])), 0);
    let m2: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("c2/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(m2["scoring"]["alpha"], 0.5);
    assert_ne!(m["config_hash"], m2["config_hash"]);

    fs::write(root.join("bad.toml"), "alpha = 0.3\n").unwrap();
    assert_eq!(code(&run(&root, &["--config", "bad.toml", "recover", "ds"])), 64);
}

#[test]
fn cards_from_ground_truth() {
    let (_tmp, root) = workspace();
    let o = run(&root, &["cards", "ds", "--out", "cards"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(root.join("cards/cards.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 50);
    let card: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(card["what"].is_string() && card["why"].is_string() && card["how"].is_string());
}
