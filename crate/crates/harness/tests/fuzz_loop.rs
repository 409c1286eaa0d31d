use std::time::Duration;

use tmplfuzz::fuzz::{fuzz, FuzzConfig};
use tmplfuzz::outcome::{Outcome, Target};
use tmplfuzz_core::engine::ExecOptions;
use tmplfuzz_core::formats::MINI_TEMPLATE;
use tmplfuzz_core::templatelang::parse_template;

fn run(target: &str, count: u64, jobs: usize, corpus: Vec<(String, Vec<u8>)>) -> tmplfuzz::fuzz::FuzzReport {
    let unit = parse_template(MINI_TEMPLATE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = FuzzConfig {
        unit: &unit,
        opts: ExecOptions::default(),
        target: Target::parse(target).unwrap(),
        count,
        duration: None,
        timeout: Duration::from_millis(200),
        jobs,
        rng_seed: 1,
        out_dir: dir.path().to_path_buf(),
        corpus,
        progress: None,
        stop_on_finding: false,
    };
    let r = fuzz(&cfg).unwrap();
    assert!(dir.path().join("stats.json").exists());
    r
}

#[test]
fn exit_status_classifies_outcomes() {
    let ok = run("true", 40, 2, Vec::new());
    assert_eq!(ok.stats.iterations, 40);
    assert_eq!(ok.stats.valid, 40);
    assert!(ok.stats.is_consistent());
    let bad = run("false", 30, 3, Vec::new());
    assert_eq!(bad.stats.invalid, 30);
    assert!(bad.findings.is_empty());
}

#[test]
fn hanging_target_times_out() {
    let r = run("sleep 5", 2, 1, Vec::new());
    assert_eq!(r.stats.timeouts, 2);
    assert_eq!(r.findings.len(), 2);
    assert!(r.findings.iter().all(|f| f.outcome == Outcome::Timeout));
}

#[test]
fn corpus_inputs_and_path_placeholder() {
    let corpus = vec![("a".to_string(), b"MINI\x01\x01\x00\x07\x07\xFF".to_vec())];
    let r = run(&format!("{} {{}}", env!("CARGO_BIN_EXE_crash-stub")), 300, 2, corpus);
    assert_eq!(r.stats.iterations, 300);
    assert!(r.stats.is_consistent());
    assert_eq!(r.stats.crashes as usize, r.findings.len());
}

#[test]
fn missing_target_is_an_error() {
    let unit = parse_template(MINI_TEMPLATE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = FuzzConfig {
        unit: &unit,
        opts: ExecOptions::default(),
        target: Target::parse("/nonexistent/target").unwrap(),
        count: 5,
        duration: None,
        timeout: Duration::from_millis(200),
        jobs: 1,
        rng_seed: 0,
        out_dir: dir.path().to_path_buf(),
        corpus: Vec::new(),
        progress: None,
        stop_on_finding: false,
    };
    assert!(fuzz(&cfg).is_err());
}
