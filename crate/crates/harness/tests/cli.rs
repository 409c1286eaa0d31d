use std::path::Path;
use std::process::{Command, Output};

fn tmplfuzz(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmplfuzz"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tmplfuzz(&["bogus"], dir.path())), 1);
    assert_eq!(code(&tmplfuzz(&["generate", "-t", "no-such-template"], dir.path())), 1);
    assert_eq!(code(&tmplfuzz(&["--help"], dir.path())), 0);
}

#[test]
fn generated_files_parse_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tmplfuzz(&["generate", "-t", "pnglite", "--no-evil", "--count", "3", "--out", "gen"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = tmplfuzz(&["parse", "-t", "pnglite", "gen/000001.bin", "--out", "parsed"], d);
    assert_eq!(code(&o), 0);
    assert!(d.join("parsed/000001.bin.tree.json").exists());
    let o = tmplfuzz(&["replay", "-t", "pnglite", "--seed", "parsed/000001.bin.seed"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(o.stdout, std::fs::read(d.join("gen/000001.bin")).unwrap());
    let o = tmplfuzz(&["verify", "-t", "pnglite", "gen/000000.bin", "gen/000002.bin"], d);
    assert_eq!(code(&o), 0);
}

#[test]
fn rejections_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.bin"), b"MINX\xFF").unwrap();
    std::fs::write(d.join("long.bin"), b"MINI\xFF\x00").unwrap();
    assert_eq!(code(&tmplfuzz(&["parse", "-t", "mini", "bad.bin"], d)), 2);
    assert_eq!(code(&tmplfuzz(&["parse", "-t", "mini", "long.bin"], d)), 4);
    let o = tmplfuzz(&["verify", "-t", "mini", "bad.bin"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("bad magic"));
}

#[test]
fn roundtrip_over_corpus_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["mini", "pnglite"] {
        let o = tmplfuzz(&["roundtrip", "-t", t, "--corpus", &corpus(t), "--count", "50"], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        let last = String::from_utf8_lossy(&o.stdout).lines().last().unwrap().to_string();
        let summary: serde_json::Value = serde_json::from_str(&last).unwrap();
        assert_eq!(summary["fail"], 0);
    }
}

#[test]
fn mutate_writes_log_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = tmplfuzz(&["mutate", "-t", "mini", "--corpus", &corpus("mini"), "--count", "20", "--out", "m"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(d.join("m/mutations.jsonl")).unwrap();
    assert!(log.lines().count() >= 20);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["op"].is_string());
    }
    let bins = std::fs::read_dir(d.join("m")).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "bin")
    });
    assert!(bins.count() > 0);
}

#[test]
fn coverage_reports_percentage() {
    let dir = tempfile::tempdir().unwrap();
    let o = tmplfuzz(&["coverage", "-t", "mini", "--count", "200", "--out", "cov.json"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("covered 8/8"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cov.json")).unwrap()).unwrap();
    assert_eq!(v["total"], 8);
    let o = tmplfuzz(&["coverage", "-t", "mini", "--count", "0", "--out", "zero.json"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("(0.0%)"));
}

#[test]
fn fuzz_finds_the_planted_crash() {
    let dir = tempfile::tempdir().unwrap();
    let o = tmplfuzz(
        &["fuzz", "-t", "mini", "--target", env!("CARGO_BIN_EXE_crash-stub"), "--count", "5000", "--stop-on-crash", "--out", "f"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let findings: Vec<_> = std::fs::read_dir(dir.path().join("f/findings")).unwrap().collect();
    assert_eq!(findings.len(), 2);
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("f/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["crashes"], 1);
}
