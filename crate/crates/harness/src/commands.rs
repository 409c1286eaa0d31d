//! Subcommand implementations. Each returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tmplfuzz_core::engine::{self, EngineError, ExecOptions};
use tmplfuzz_core::formats;
use tmplfuzz_core::mutation::{index_corpus, random_smart_mutation_logged};
use tmplfuzz_core::templatelang::TemplateUnit;

use crate::cli::Command;
use crate::fuzz::{fuzz, FuzzConfig};
use crate::outcome::Target;
use crate::{load_template, read_corpus, EXIT_OK, EXIT_REJECTED, EXIT_ROUNDTRIP, EXIT_TRAILING, EXIT_USAGE};

pub fn run(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::Generate {
            t,
            count,
            rng_seed,
            seed,
            out,
        } => {
            let tpl = load_template(&t.template)?;
            let opts = t.exec_options();
            match seed {
                Some(seed) => generate_one(&tpl.unit, &seed, out.as_deref(), &opts),
                None => generate_many(&tpl.unit, count, rng_seed, out.as_deref(), &opts),
            }
        }
        Command::Parse { t, files, out } => {
            let tpl = load_template(&t.template)?;
            parse_files(&tpl.unit, &files, out.as_deref(), &t.exec_options())
        }
        Command::Replay {
            t,
            seed,
            out,
            target,
            timeout_ms,
        } => {
            let tpl = load_template(&t.template)?;
            let bytes = std::fs::read(&seed).with_context(|| format!("reading {}", seed.display()))?;
            let gen = engine::generate_from_seed(&tpl.unit, &bytes, &t.exec_options())
                .map_err(|e| anyhow::anyhow!("generation failed: {e}"))?;
            if let Some(out) = &out {
                std::fs::write(out, &gen.file).with_context(|| format!("writing {}", out.display()))?;
            }
            match target {
                Some(cmd) => {
                    let o = Target::parse(&cmd)?.run(&gen.file, Duration::from_millis(timeout_ms))?;
                    println!("{}", serde_json::json!({"bytes": gen.file.len(), "outcome": o}));
                }
                None if out.is_none() => std::io::stdout().write_all(&gen.file)?,
                None => {}
            }
            Ok(EXIT_OK)
        }
        Command::Mutate {
            t,
            corpus,
            count,
            rng_seed,
            out,
        } => {
            let tpl = load_template(&t.template)?;
            mutate(&tpl.unit, &corpus, count, rng_seed, &out, &t.exec_options())
        }
        Command::Fuzz {
            t,
            target,
            count,
            duration_secs,
            rng_seed,
            timeout_ms,
            jobs,
            corpus,
            out,
            stop_on_crash,
        } => {
            let tpl = load_template(&t.template)?;
            let corpus = match corpus {
                Some(dir) => read_corpus(&dir)?,
                None => Vec::new(),
            };
            let cfg = FuzzConfig {
                unit: &tpl.unit,
                opts: t.exec_options(),
                target: Target::parse(&target)?,
                count,
                duration: duration_secs.map(Duration::from_secs),
                timeout: Duration::from_millis(timeout_ms),
                jobs,
                rng_seed,
                out_dir: out,
                corpus,
                progress: Some(Duration::from_secs(1)),
                stop_on_finding: stop_on_crash,
            };
            let report = fuzz(&cfg)?;
            for f in &report.findings {
                eprintln!("finding: {} ({})", f.bin.display(), f.seed.display());
            }
            Ok(EXIT_OK)
        }
        Command::Roundtrip {
            t,
            corpus,
            count,
            rng_seed,
        } => {
            let tpl = load_template(&t.template)?;
            let corpus = match corpus {
                Some(dir) => read_corpus(&dir)?,
                None => Vec::new(),
            };
            let report = roundtrip(&tpl.unit, &corpus, count, rng_seed, &t.exec_options());
            for item in &report.items {
                println!("{}", serde_json::to_string(item)?);
            }
            println!("{}", serde_json::to_string(&report.summary())?);
            Ok(if report.failures() > 0 { EXIT_ROUNDTRIP } else { EXIT_OK })
        }
        Command::Coverage {
            t,
            count,
            rng_seed,
            out,
        } => {
            let tpl = load_template(&t.template)?;
            let report = coverage(&tpl.unit, count, rng_seed, &t.exec_options());
            println!(
                "covered {}/{} declarations ({:.1}%)",
                report.covered,
                report.total,
                report.percent()
            );
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            Ok(EXIT_OK)
        }
        Command::Verify { t, files } => {
            let Some(oracle) = formats::oracle_for(&t.template) else {
                eprintln!("no oracle for template `{}`", t.template);
                return Ok(EXIT_USAGE);
            };
            let mut code = EXIT_OK;
            for f in files {
                let bytes = std::fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
                let v = oracle(&bytes);
                let first = v.first().map(ToString::to_string);
                println!(
                    "{}",
                    serde_json::json!({"file": f.display().to_string(), "valid": v.valid(), "violations": v.violations.iter().map(ToString::to_string).collect::<Vec<_>>(), "first": first})
                );
                if !v.valid() {
                    code = EXIT_REJECTED;
                }
            }
            Ok(code)
        }
    }
}

fn generate_one(unit: &TemplateUnit, seed: &Path, out: Option<&Path>, opts: &ExecOptions) -> anyhow::Result<i32> {
    let bytes = std::fs::read(seed).with_context(|| format!("reading {}", seed.display()))?;
    let gen = engine::generate_from_seed(unit, &bytes, opts).map_err(|e| anyhow::anyhow!("generation failed: {e}"))?;
    match out {
        Some(p) => std::fs::write(p, &gen.file).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&gen.file)?,
    }
    Ok(EXIT_OK)
}

fn generate_many(unit: &TemplateUnit, count: u64, rng_seed: u64, out: Option<&Path>, opts: &ExecOptions) -> anyhow::Result<i32> {
    let dir = out.unwrap_or(Path::new("out"));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut failed = 0;
    for i in 0..count {
        match engine::generate_random(unit, rng_seed.wrapping_add(i), opts) {
            Ok(gen) => {
                std::fs::write(dir.join(format!("{i:06}.bin")), &gen.file)?;
                std::fs::write(dir.join(format!("{i:06}.seed")), &gen.seed)?;
            }
            Err(e) => {
                failed += 1;
                log_failure(i, &e);
            }
        }
    }
    println!("{}", serde_json::json!({"generated": count - failed, "failed": failed, "out": dir.display().to_string()}));
    Ok(EXIT_OK)
}

fn log_failure(i: u64, e: &EngineError) {
    eprintln!("generation {i} failed: {e}");
}

fn side_path(input: &Path, out: Option<&Path>, ext: &str) -> PathBuf {
    let name = format!("{}.{ext}", input.file_name().unwrap_or_default().to_string_lossy());
    match out {
        Some(dir) => dir.join(name),
        None => input.with_file_name(name),
    }
}

fn parse_files(unit: &TemplateUnit, files: &[PathBuf], out: Option<&Path>, opts: &ExecOptions) -> anyhow::Result<i32> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let mut code = EXIT_OK;
    for f in files {
        let bytes = std::fs::read(f).with_context(|| format!("reading {}", f.display()))?;
        match engine::parse(unit, &bytes, opts) {
            Ok(p) => {
                std::fs::write(side_path(f, out, "seed"), &p.seed)?;
                std::fs::write(side_path(f, out, "tree.json"), p.tree.to_json())?;
                println!("{}", serde_json::json!({"file": f.display().to_string(), "ok": true, "seed_bytes": p.seed.len()}));
            }
            Err(e) => {
                println!("{}", serde_json::json!({"file": f.display().to_string(), "ok": false, "error": e.to_string()}));
                let c = match e {
                    EngineError::TrailingBytes { .. } => EXIT_TRAILING,
                    _ => EXIT_REJECTED,
                };
                code = code.max(c);
            }
        }
    }
    Ok(code)
}

fn mutate(unit: &TemplateUnit, corpus: &Path, count: u64, rng_seed: u64, out: &Path, opts: &ExecOptions) -> anyhow::Result<i32> {
    let files = read_corpus(corpus)?;
    let (pool, rejected) = index_corpus(unit, files, opts);
    for (name, e) in &rejected {
        eprintln!("skipping {name}: {e}");
    }
    if pool.files.is_empty() {
        bail!("no parseable files in {}", corpus.display());
    }
    std::fs::create_dir_all(out)?;
    let mut log = std::fs::File::create(out.join("mutations.jsonl"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut made = 0;
    for i in 0..count {
        let (records, result) = random_smart_mutation_logged(unit, &pool, &mut rng, opts);
        for r in &records {
            writeln!(log, "{}", r.to_jsonl())?;
        }
        if let Some(gen) = result {
            std::fs::write(out.join(format!("mut-{i:06}.bin")), &gen.file)?;
            std::fs::write(out.join(format!("mut-{i:06}.seed")), &gen.seed)?;
            made += 1;
        }
    }
    println!("{}", serde_json::json!({"mutations": made, "requested": count, "out": out.display().to_string()}));
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundtripStatus {
    Pass,
    /// The template rejects the file; not a round-trip failure.
    ParseRejected,
    /// Generation failed for this seed.
    GenFailed,
    /// The generator took an evil decision and the result does not parse.
    EvilUnparseable,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripItem {
    pub item: String,
    pub status: RoundtripStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RoundtripReport {
    pub items: Vec<RoundtripItem>,
}

impl RoundtripReport {
    pub fn count(&self, s: RoundtripStatus) -> usize {
        self.items.iter().filter(|i| i.status == s).count()
    }

    pub fn failures(&self) -> usize {
        self.count(RoundtripStatus::Fail)
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "pass": self.count(RoundtripStatus::Pass),
            "fail": self.failures(),
            "parse_rejected": self.count(RoundtripStatus::ParseRejected),
            "gen_failed": self.count(RoundtripStatus::GenFailed),
            "evil_unparseable": self.count(RoundtripStatus::EvilUnparseable),
        })
    }
}

fn regenerate_matches(unit: &TemplateUnit, file: &[u8], seed: &[u8], opts: &ExecOptions) -> Result<(), String> {
    match engine::generate_from_seed(unit, seed, opts) {
        Ok(g) if g.file == file => Ok(()),
        Ok(g) => Err(format!("regenerated {} bytes differ from the original {}", g.file.len(), file.len())),
        Err(e) => Err(format!("regeneration failed: {e}")),
    }
}

/// Corpus files: parse, regenerate, compare. Random seeds: generate, parse,
/// regenerate, compare.
pub fn roundtrip(
    unit: &TemplateUnit,
    corpus: &[(String, Vec<u8>)],
    count: u64,
    rng_seed: u64,
    opts: &ExecOptions,
) -> RoundtripReport {
    let mut report = RoundtripReport::default();
    let item = |name: String, status, detail: Option<String>| RoundtripItem {
        item: name,
        status,
        detail,
    };
    for (name, bytes) in corpus {
        let it = match engine::parse(unit, bytes, opts) {
            Ok(p) => match regenerate_matches(unit, bytes, &p.seed, opts) {
                Ok(()) => item(name.clone(), RoundtripStatus::Pass, None),
                Err(d) => item(name.clone(), RoundtripStatus::Fail, Some(d)),
            },
            Err(e) => item(name.clone(), RoundtripStatus::ParseRejected, Some(e.to_string())),
        };
        report.items.push(it);
    }
    for i in 0..count {
        let s = rng_seed.wrapping_add(i);
        let name = format!("rng-seed {s}");
        let it = match engine::generate_random(unit, s, opts) {
            Err(e) => item(name, RoundtripStatus::GenFailed, Some(e.to_string())),
            Ok(g) => match engine::parse(unit, &g.file, opts) {
                Ok(p) => match regenerate_matches(unit, &g.file, &p.seed, opts) {
                    Ok(()) => item(name, RoundtripStatus::Pass, None),
                    Err(d) => item(name, RoundtripStatus::Fail, Some(d)),
                },
                Err(e) if g.evil_taken() => item(name, RoundtripStatus::EvilUnparseable, Some(e.to_string())),
                Err(e) => item(name, RoundtripStatus::Fail, Some(format!("generated file does not parse: {e}"))),
            },
        };
        report.items.push(it);
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct DeclHits {
    pub id: usize,
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
    pub line: u32,
    pub hits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub generations: u64,
    pub successful: u64,
    pub covered: usize,
    pub total: usize,
    pub declarations: Vec<DeclHits>,
}

impl CoverageReport {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }
}

/// Runs `count` random generations and counts how often each input declaration executed.
/// Failed generations still contribute the declarations they reached.
pub fn coverage(unit: &TemplateUnit, count: u64, rng_seed: u64, opts: &ExecOptions) -> CoverageReport {
    let mut hits = vec![0u64; unit.decls.len()];
    let mut successful = 0;
    for i in 0..count {
        if let Ok(g) = engine::generate_random(unit, rng_seed.wrapping_add(i), opts) {
            successful += 1;
            for id in g.coverage {
                hits[id] += 1;
            }
        }
    }
    let covered = if count == 0 { 0 } else { hits.iter().filter(|&&h| h > 0).count() };
    CoverageReport {
        generations: count,
        successful,
        covered,
        total: unit.decls.len(),
        declarations: unit
            .decls
            .iter()
            .filter(|d| hits[d.id] > 0)
            .map(|d| DeclHits {
                id: d.id,
                name: d.name.to_string(),
                type_name: d.type_name.to_string(),
                line: d.span.line,
                hits: hits[d.id],
            })
            .collect(),
    }
}
